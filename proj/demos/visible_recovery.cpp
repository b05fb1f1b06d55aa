// Recovers a space-time Gaussian bump from noisy line integrals and prints the
// error for a few noise levels next to the part of the spectrum no direction sees.

#include "tdxray/tdxray.hpp"

#include <cstdio>

using namespace tdxray;

int main() {
    const auto params = default_bump_params();
    const auto f = gaussian_bump(params);
    const auto body = ConvexBody<2>::ball(Vec<2>::Zero(), 5.0);
    const SpaceTimeGrid<2> grid;
    const auto lattice = FrequencyLattice<2>::dual_of(grid);
    const auto truth = sample(f, grid);

    const double R_max = choose_R(1e-9, 0.5, 2).R;
    const auto spectrum = visible_spectrum(f, lattice, R_max, body, 1);
    std::printf("visible lattice points in B_%.2f: %zu\n", R_max, spectrum.index.size());
    std::printf("%10s %8s %12s %14s\n", "delta", "R", "l2_error", "hidden_energy");
    for (double delta : {1e-3, 1e-5, 1e-7, 1e-9}) {
        const auto plan = make_plan(delta, 0.5, 2);
        const auto rec = truncated_inversion(spectrum.field(delta, plan.R), plan, grid);
        const double l2 = field_errors(truth, rec.samples, grid).first;
        const auto split = parseval_split(truth, grid, plan.R);
        std::printf("%10.0e %8.3f %12.5f %14.5f\n", delta, plan.R, l2, std::sqrt(split.hidden_in_ball));
    }
}
