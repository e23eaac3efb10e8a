#ifndef NUDGE_DATASET_HPP
#define NUDGE_DATASET_HPP

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace nudge {

// A categorical column. Levels are kept in sorted label order and `codes`
// indexes into them.
struct Covariate {
    std::string name;
    std::vector<std::string> levels;
    Eigen::VectorXi codes;

    static Covariate from_labels(std::string name, const std::vector<std::string>& labels);
};

// Observed columns (Z, A, Y, L) only.
struct ObservedDataset {
    Eigen::VectorXi z;
    Eigen::VectorXi a;
    Eigen::VectorXd y;
    std::vector<Covariate> covariates;

    Eigen::Index size() const { return y.size(); }

    // Throws DomainError naming the first offending row when z or a leave
    // {0, 1}, y is not finite, or column lengths disagree.
    void check() const;

    const Covariate& covariate(const std::string& name) const;

    // Rows picked by index (with repetition), levels preserved.
    ObservedDataset take(std::span<const Eigen::Index> rows) const;
};

}  // namespace nudge

#endif  // NUDGE_DATASET_HPP
