// Simulate a few two-armed bandit sessions, fit them with the relaxed convex
// problem, recover learning rates and sensitivities, and compare to truth.
#include "banditfit/banditfit.hpp"

#include <cstdio>

using namespace banditfit;

int main() {
    const auto spec = EnvSpec::preset(Setup::BSC, BanditSize::TwoArm, 200, 42);
    const auto ds = make_dataset(spec, 5);

    RecoveryOptions ropt;
    ropt.beta_box = spec.beta_box;

    std::printf("%4s %8s %8s %8s %8s %10s %10s\n", "ep", "alpha", "alpha*", "beta", "beta*", "J_lb", "NLL(true)");
    for (std::size_t e = 0; e < ds.episodes.size(); ++e) {
        const auto& ep = ds.episodes[e];
        RLFit model(0, spec.shared());
        const Vector w = Vector::Ones(1);
        const auto& sol = model.fit(ep.data.rewards, ep.data.actions, w);
        ropt.seed = e;
        const auto& rec = model.fit_param(ropt);
        std::printf("%4zu %8.3f %8.3f %8.3f %8.3f %10.3f %10.3f\n", e, ep.true_params.alpha[0](0),
                    rec.params.alpha[0](0), ep.true_params.beta[0](0), rec.params.beta[0](0), sol.J_lb,
                    episode_nll(ep.true_params, ep.data, model_config(spec)));
    }
}
