#include "bucksim/trojan.hpp"

namespace bucksim {

bool trigger_active(double t, const TrojanConfig& cfg) {
    if (cfg.target == TrojanTarget::None) return false;
    return t >= cfg.t_trigger && t < cfg.t_release;
}

bool corrupt(bool pwm, bool trig, TrojanGate gate) {
    switch (gate) {
        case TrojanGate::Or:
            return pwm || trig;
        case TrojanGate::Nor:
            return !(pwm || trig);
    }
    return pwm;
}

GateLevels apply_trojan(GateLevels commanded, double t, const TrojanConfig& cfg) {
    if (cfg.target == TrojanTarget::None) return commanded;
    const bool trig = trigger_active(t, cfg);
    GateLevels out = commanded;
    if (cfg.target == TrojanTarget::Pmos) {
        // The PMOS gate net is active low; corrupt the net level, then map
        // back to a conduction flag.
        const bool net = !commanded.pmos_on;
        const bool feed = cfg.gate == TrojanGate::Nor ? !net : net;
        out.pmos_on = !corrupt(feed, trig, cfg.gate);
        if (cfg.suppress_complement && trig) out.nmos_on = false;
    } else {
        const bool net = commanded.nmos_on;
        const bool feed = cfg.gate == TrojanGate::Nor ? !net : net;
        out.nmos_on = corrupt(feed, trig, cfg.gate);
        if (cfg.suppress_complement && trig) out.pmos_on = false;
    }
    return out;
}

}  // namespace bucksim
