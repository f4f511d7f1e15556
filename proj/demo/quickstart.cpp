// Solve a grid world with the point-based TOQ solver and check the bound by simulation.
//   quickstart [world.json]

#include <iostream>
#include <string>

#include "momdp/momdp.hpp"

int main(int argc, char** argv) {
    using namespace momdp;
    const std::string path = argc > 1 ? argv[1] : MOMDP_WORLDS_DIR "/grid_5x5_3.json";
    grid::CompiledGrid cg = grid::compile_grid(io::load_grid(path));

    auto points = generate_belief_points(cg.model, 64, 1, cg.start_state, cg.initial_belief);
    Policy policy(cg.model, synth(cg.model, points, Variant::TOQ));
    LexValue v0 = approx_values(policy.stack(), 0, cg.start_state, cg.initial_belief);
    std::cout << "J_0 = " << v0.constraint << ", predicted steps outside the goal "
              << static_cast<double>(cg.model.horizon() + 1) - v0.value << '\n';

    MonteCarloOptions mc;
    mc.s0 = cg.start_state;
    mc.b0 = cg.initial_belief;
    mc.failure_states = {cg.fail_state};
    RunMetrics r = monte_carlo(cg.model, policy, 5000, EnvironmentSampler::from_grid(cg), 7, mc);
    std::cout << "simulated failure " << r.failure_rate << " +- " << r.confidence_halfwidth << " (bound "
              << *r.failure_bound << "), mean steps " << r.expected_time << '\n';
}
