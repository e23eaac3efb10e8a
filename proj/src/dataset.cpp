#include "nudge/dataset.hpp"

#include "nudge/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace nudge {

Covariate Covariate::from_labels(std::string name, const std::vector<std::string>& labels) {
    Covariate out{std::move(name), labels, Eigen::VectorXi(static_cast<Eigen::Index>(labels.size()))};
    std::sort(out.levels.begin(), out.levels.end());
    out.levels.erase(std::unique(out.levels.begin(), out.levels.end()), out.levels.end());
    std::map<std::string_view, int> index;
    for (std::size_t k = 0; k < out.levels.size(); ++k) index.emplace(out.levels[k], static_cast<int>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) out.codes(static_cast<Eigen::Index>(i)) = index.at(labels[i]);
    return out;
}

void ObservedDataset::check() const {
    const Eigen::Index n = size();
    if (n == 0) throw Error(ErrorKind::EmptyPanel, "dataset has no rows");
    if (z.size() != n || a.size() != n) throw Error(ErrorKind::DomainError, "column lengths differ");
    for (const auto& c : covariates)
        if (c.codes.size() != n) throw Error(ErrorKind::DomainError, "covariate length differs", c.name);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (z(i) != 0 && z(i) != 1)
            throw Error(ErrorKind::DomainError, "z must be 0 or 1", "row " + std::to_string(i));
        if (a(i) != 0 && a(i) != 1)
            throw Error(ErrorKind::DomainError, "a must be 0 or 1", "row " + std::to_string(i));
        if (!std::isfinite(y(i)))
            throw Error(ErrorKind::DomainError, "y must be finite", "row " + std::to_string(i));
    }
}

const Covariate& ObservedDataset::covariate(const std::string& name) const {
    for (const auto& c : covariates)
        if (c.name == name) return c;
    throw Error(ErrorKind::SchemaError, "no covariate column named '" + name + "'", name);
}

ObservedDataset ObservedDataset::take(std::span<const Eigen::Index> rows) const {
    const auto m = static_cast<Eigen::Index>(rows.size());
    ObservedDataset out;
    out.z.resize(m);
    out.a.resize(m);
    out.y.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        out.z(i) = z(rows[i]);
        out.a(i) = a(rows[i]);
        out.y(i) = y(rows[i]);
    }
    out.covariates.reserve(covariates.size());
    for (const auto& c : covariates) {
        Covariate copy{c.name, c.levels, Eigen::VectorXi(m)};
        for (Eigen::Index i = 0; i < m; ++i) copy.codes(i) = c.codes(rows[i]);
        out.covariates.push_back(std::move(copy));
    }
    return out;
}

}  // namespace nudge
