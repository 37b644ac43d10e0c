// Runs one node under each policy on the same synthetic stream and prints
// every dissemination.
#include <iostream>

#include "qsim/simulator.hpp"

int main() {
    using namespace qsim;
    const t2::Engine engine;
    const auto source = StreamSource::synthetic(7, 4, SyntheticProfile{});

    for (Policy p : {Policy::uddm, Policy::bm, Policy::pm}) {
        ExperimentConfig cfg;
        cfg.policy = p;
        cfg.T = 20;
        cfg.theta = 0.6;
        const std::vector<std::vector<DataVector>> streams{source.slice(0, cfg.slice_length())};
        const ExperimentTrace trace = run_experiment(cfg, engine, streams);

        std::cout << to_string(p) << ": " << trace.events.size() << " message(s)\n";
        for (const auto& e : trace.events) {
            std::cout << "  step " << e.step << "  t*=" << e.t_star << "  " << to_string(e.cause)
                      << "  |dS|=" << e.magnitude;
            if (e.score) std::cout << "  G=" << *e.score;
            std::cout << '\n';
        }
    }
}
