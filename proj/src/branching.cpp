#include "koop/branching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "koop/errors.hpp"

namespace koop {

namespace {

/// Exhaustive minimal-cost assignment. Spectra here have at most a handful of
/// entries (state dimensions <= 5), so n! enumeration is cheap and exact.
std::vector<int> best_assignment(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_total = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n && total < best_total; ++i) {
            total += cost(i, perm[static_cast<std::size_t>(i)]).real();
        }
        if (total < best_total) {
            best_total = total;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

BranchTracking track_eigenvalue_branches(const std::vector<Vector>& mu_sets,
                                         const std::vector<Matrix>& vector_sets) {
    BranchTracking out;
    if (mu_sets.empty()) return out;
    const int n = static_cast<int>(mu_sets.front().size());
    const bool with_vectors = !vector_sets.empty();
    if (with_vectors && vector_sets.size() != mu_sets.size()) {
        throw NumericError("track_eigenvalue_branches: eigenvector sets do not cover every step");
    }

    for (const auto& mus : mu_sets) {
        if (static_cast<int>(mus.size()) != n) {
            throw NumericError("track_eigenvalue_branches: spectra change size between steps");
        }
        for (int i = 0; i < n; ++i) {
            if (std::abs(mus[i]) == 0.0) {
                throw NumericError("track_eigenvalue_branches: zero eigenvalue has no logarithm");
            }
        }
    }

    out.exponents.reserve(mu_sets.size());
    out.matching.reserve(mu_sets.size());
    out.ambiguous.reserve(mu_sets.size());

    Vector current(n);      // branch eigenvalues at the previous step
    Matrix current_vecs;    // branch eigenvectors at the previous step
    Vector lambda(n);
    std::vector<int> identity(static_cast<std::size_t>(n));
    std::iota(identity.begin(), identity.end(), 0);

    for (std::size_t k = 0; k < mu_sets.size(); ++k) {
        const Vector& mus = mu_sets[k];

        bool collide = false;
        for (int i = 0; i < n && !collide; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (std::abs(mus[i] - mus[j]) < 1e-12) {
                    collide = true;
                    break;
                }
            }
        }
        out.ambiguous.push_back(collide);

        if (k == 0) {
            for (int i = 0; i < n; ++i) {
                current[i] = mus[i];
                lambda[i] = std::log(mus[i]);
            }
            if (with_vectors) current_vecs = vector_sets[0];
            out.matching.push_back(identity);
        } else {
            Matrix cost(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    double c = std::abs(std::log(mus[j] / current[i]));
                    if (with_vectors) {
                        const double overlap =
                            std::abs(current_vecs.col(i).dot(vector_sets[k].col(j)));
                        c += 1.0 - std::min(1.0, overlap);
                    }
                    cost(i, j) = c;
                }
            }
            const std::vector<int> perm = best_assignment(cost);
            Vector next_lambda(n);
            Vector next_current(n);
            Matrix next_vecs;
            if (with_vectors) next_vecs.resize(vector_sets[k].rows(), n);
            for (int i = 0; i < n; ++i) {
                const Complex mu = mus[perm[static_cast<std::size_t>(i)]];
                const Complex inc = std::log(mu / current[i]);
                next_lambda[i] = Complex(std::log(std::abs(mu)), lambda[i].imag() + inc.imag());
                next_current[i] = mu;
                if (with_vectors) next_vecs.col(i) = vector_sets[k].col(perm[static_cast<std::size_t>(i)]);
            }
            lambda = next_lambda;
            current = next_current;
            if (with_vectors) current_vecs = next_vecs;
            out.matching.push_back(perm);
        }
        out.exponents.push_back(lambda);
    }
    return out;
}

}  // namespace koop
