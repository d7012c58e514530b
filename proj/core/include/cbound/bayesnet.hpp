#pragma once

#include <map>
#include <string>
#include <vector>

#include "cbound/dist.hpp"
#include "cbound/optimizer.hpp"

namespace cbound {

/// Conditioning assignment: variable name -> state name.
using Evidence = std::map<std::string, std::string>;

struct BnVariable {
    std::string name;
    std::vector<std::string> states;
    std::vector<std::string> parents;
    /// Rows iterate parent configurations in row-major order of the parents
    /// list (first parent slowest); columns iterate own states.
    Matrix cpt;
};

/// Small discrete Bayesian network with exact inference by enumeration.
class BayesNet {
public:
    /// Build from already-parsed variables; validates acyclicity, CPT shapes
    /// and row normalization, and stores variables in topological order.
    static BayesNet validate(std::vector<BnVariable> variables);

    const std::vector<BnVariable>& variables() const noexcept { return vars_; }
    std::size_t index_of(const std::string& name) const;
    bool has_variable(const std::string& name) const;

    /// Total configuration count; enumeration refuses beyond 2^22.
    std::size_t configuration_count() const;

private:
    std::vector<BnVariable> vars_;
    std::map<std::string, std::size_t> by_name_;
};

/// Exact P(X, Y | evidence) by full enumeration.
JointDistribution joint_xy(const BayesNet& net, const std::string& x_var,
                           const std::string& y_var, const Evidence& evidence = {});

/// Entropy of the exact posterior marginal of var given evidence.
double variable_entropy(const BayesNet& net, const std::string& var,
                        const Evidence& evidence = {});

/// Exact posterior marginal of var given evidence.
Distribution posterior_marginal(const BayesNet& net, const std::string& var,
                                const Evidence& evidence = {});

/// Merge states of var according to the partition (each group is a list of
/// existing state names covering all states exactly once). The variable's
/// own CPT sums columns within groups; children's CPTs average the merged
/// parent rows weighted by the parent's marginal within each group.
BayesNet discretize(const BayesNet& net, const std::string& var,
                    const std::vector<std::vector<std::string>>& partition);

/// Pre-aggregated contingency table: one column per variable plus a final
/// "count" column; rows are joint configurations.
class ContingencyTable {
public:
    static ContingencyTable from_rows(std::vector<std::string> variables,
                                      std::vector<std::vector<std::string>> rows,
                                      std::vector<double> counts);

    const std::vector<std::string>& variables() const noexcept { return vars_; }
    const std::vector<std::string>& states_of(const std::string& var) const;

    /// Normalized joint over (x_var, y_var) after filtering on evidence.
    JointDistribution joint_xy(const std::string& x_var, const std::string& y_var,
                               const Evidence& evidence = {}) const;

private:
    std::vector<std::string> vars_;
    std::vector<std::vector<std::string>> states_;        // per variable
    std::vector<std::vector<std::size_t>> row_states_;    // per row, state index per var
    std::vector<double> counts_;
};

}  // namespace cbound
