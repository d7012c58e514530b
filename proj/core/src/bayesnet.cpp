#include "cbound/bayesnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cbound {

namespace {

constexpr std::size_t kMaxConfigurations = std::size_t{1} << 22;
constexpr double kRowSlack = 1e-8;

std::size_t state_index(const BnVariable& v, const std::string& state) {
    for (std::size_t i = 0; i < v.states.size(); ++i) {
        if (v.states[i] == state) return i;
    }
    throw Error(ErrorCode::UnknownVariable,
                "variable '" + v.name + "' has no state '" + state + "'");
}

/// Enumeration context over a validated (topologically ordered) net.
struct Enumerator {
    const BayesNet& net;
    std::vector<std::size_t> parent_idx_flat;   // parent variable indices
    std::vector<std::size_t> parent_offset;     // per variable into flat list

    explicit Enumerator(const BayesNet& n) : net(n) {
        parent_offset.push_back(0);
        for (const BnVariable& v : net.variables()) {
            for (const std::string& p : v.parents) {
                parent_idx_flat.push_back(net.index_of(p));
            }
            parent_offset.push_back(parent_idx_flat.size());
        }
    }

    std::size_t cpt_row(std::size_t var, const std::vector<std::size_t>& assign) const {
        const auto& vars = net.variables();
        std::size_t row = 0;
        for (std::size_t t = parent_offset[var]; t < parent_offset[var + 1]; ++t) {
            const std::size_t pv = parent_idx_flat[t];
            row = row * vars[pv].states.size() + assign[pv];
        }
        return row;
    }

    /// Visit every configuration consistent with the fixed assignments and
    /// pass its probability to sink(assign, weight). Parents precede their
    /// children in the stored order, so prefix weights multiply cleanly.
    template <typename Sink>
    void for_each(const std::vector<int>& fixed, Sink&& sink) const {
        const auto& vars = net.variables();
        std::vector<std::size_t> assign(vars.size(), 0);
        auto rec = [&](auto&& self, std::size_t v, double weight) -> void {
            if (v == vars.size()) {
                sink(assign, weight);
                return;
            }
            const std::size_t row = cpt_row(v, assign);
            if (fixed[v] >= 0) {
                assign[v] = static_cast<std::size_t>(fixed[v]);
                self(self, v + 1, weight * vars[v].cpt.at(row, assign[v]));
                return;
            }
            for (std::size_t s = 0; s < vars[v].states.size(); ++s) {
                assign[v] = s;
                self(self, v + 1, weight * vars[v].cpt.at(row, s));
            }
        };
        rec(rec, 0, 1.0);
    }
};

std::vector<int> fixed_from_evidence(const BayesNet& net, const Evidence& evidence) {
    std::vector<int> fixed(net.variables().size(), -1);
    for (const auto& [name, state] : evidence) {
        const std::size_t v = net.index_of(name);
        fixed[v] = static_cast<int>(state_index(net.variables()[v], state));
    }
    return fixed;
}

void check_enumerable(const BayesNet& net) {
    if (net.configuration_count() > kMaxConfigurations) {
        throw Error(ErrorCode::ProgramTooLarge,
                    "network exceeds the enumeration cap of 2^22 configurations");
    }
}

}  // namespace

BayesNet BayesNet::validate(std::vector<BnVariable> variables) {
    std::map<std::string, std::size_t> original;
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (!original.emplace(variables[i].name, i).second) {
            throw Error(ErrorCode::ParseError,
                        "duplicate variable '" + variables[i].name + "'");
        }
        if (variables[i].states.empty()) {
            throw Error(ErrorCode::ParseError,
                        "variable '" + variables[i].name + "' has no states");
        }
    }

    // Kahn topological ordering (stable on the input order).
    std::vector<std::size_t> indeg(variables.size(), 0);
    std::vector<std::vector<std::size_t>> children(variables.size());
    for (std::size_t i = 0; i < variables.size(); ++i) {
        for (const std::string& p : variables[i].parents) {
            const auto it = original.find(p);
            if (it == original.end()) {
                throw Error(ErrorCode::UnknownVariable,
                            "unknown parent '" + p + "' of '" + variables[i].name + "'");
            }
            children[it->second].push_back(i);
            ++indeg[i];
        }
    }
    std::vector<std::size_t> order;
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (indeg[i] == 0) ready.push_back(i);
    }
    while (!ready.empty()) {
        std::sort(ready.begin(), ready.end());
        const std::size_t v = ready.front();
        ready.erase(ready.begin());
        order.push_back(v);
        for (std::size_t c : children[v]) {
            if (--indeg[c] == 0) ready.push_back(c);
        }
    }
    if (order.size() != variables.size()) {
        throw Error(ErrorCode::CycleDetected, "parent references form a cycle");
    }

    BayesNet net;
    for (std::size_t rank : order) net.vars_.push_back(std::move(variables[rank]));
    for (std::size_t i = 0; i < net.vars_.size(); ++i) {
        net.by_name_[net.vars_[i].name] = i;
    }

    for (const BnVariable& v : net.vars_) {
        std::size_t rows = 1;
        for (const std::string& p : v.parents) {
            rows *= net.vars_[net.index_of(p)].states.size();
        }
        if (v.cpt.rows != rows || v.cpt.cols != v.states.size()) {
            std::ostringstream os;
            os << "CPT of '" << v.name << "' is " << v.cpt.rows << "x" << v.cpt.cols
               << ", expected " << rows << "x" << v.states.size();
            throw Error(ErrorCode::CptShapeMismatch, os.str());
        }
        for (std::size_t r = 0; r < v.cpt.rows; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < v.cpt.cols; ++c) {
                const double e = v.cpt.at(r, c);
                if (e < -1e-12 || e > 1.0 + 1e-12) {
                    throw Error(ErrorCode::RowNotNormalized,
                                "CPT entry of '" + v.name + "' outside [0,1]");
                }
                sum += e;
            }
            if (std::abs(sum - 1.0) > kRowSlack) {
                std::ostringstream os;
                os << "CPT row " << r << " of '" << v.name << "' sums to " << sum;
                throw Error(ErrorCode::RowNotNormalized, os.str());
            }
        }
    }
    return net;
}

std::size_t BayesNet::index_of(const std::string& name) const {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) {
        throw Error(ErrorCode::UnknownVariable, "unknown variable '" + name + "'");
    }
    return it->second;
}

bool BayesNet::has_variable(const std::string& name) const {
    return by_name_.count(name) > 0;
}

std::size_t BayesNet::configuration_count() const {
    std::size_t total = 1;
    for (const BnVariable& v : vars_) {
        if (total > kMaxConfigurations) return total;
        total *= v.states.size();
    }
    return total;
}

JointDistribution joint_xy(const BayesNet& net, const std::string& x_var,
                           const std::string& y_var, const Evidence& evidence) {
    check_enumerable(net);
    const std::size_t xi = net.index_of(x_var);
    const std::size_t yi = net.index_of(y_var);
    if (xi == yi) {
        throw Error(ErrorCode::OutOfRange, "x and y must be distinct variables");
    }
    if (evidence.count(x_var) || evidence.count(y_var)) {
        throw Error(ErrorCode::OutOfRange, "query variable is fixed by evidence");
    }

    const Enumerator en(net);
    const std::vector<int> fixed = fixed_from_evidence(net, evidence);
    const std::size_t nx = net.variables()[xi].states.size();
    const std::size_t ny = net.variables()[yi].states.size();
    std::vector<std::vector<double>> p(ny, std::vector<double>(nx, 0.0));
    double total = 0.0;
    en.for_each(fixed, [&](const std::vector<std::size_t>& assign, double w) {
        p[assign[yi]][assign[xi]] += w;
        total += w;
    });
    if (total <= 1e-300) {
        throw Error(ErrorCode::ZeroEvidenceProbability,
                    "evidence has zero probability");
    }
    for (auto& row : p) {
        for (double& v : row) v /= total;
    }
    return JointDistribution::validate(std::move(p), net.variables()[xi].states,
                                       net.variables()[yi].states);
}

Distribution posterior_marginal(const BayesNet& net, const std::string& var,
                                const Evidence& evidence) {
    check_enumerable(net);
    const std::size_t vi = net.index_of(var);
    if (evidence.count(var)) {
        throw Error(ErrorCode::OutOfRange, "variable is fixed by evidence");
    }
    const Enumerator en(net);
    const std::vector<int> fixed = fixed_from_evidence(net, evidence);
    std::vector<double> w(net.variables()[vi].states.size(), 0.0);
    double total = 0.0;
    en.for_each(fixed, [&](const std::vector<std::size_t>& assign, double weight) {
        w[assign[vi]] += weight;
        total += weight;
    });
    if (total <= 1e-300) {
        throw Error(ErrorCode::ZeroEvidenceProbability,
                    "evidence has zero probability");
    }
    for (double& v : w) v /= total;
    return Distribution(std::move(w));
}

double variable_entropy(const BayesNet& net, const std::string& var,
                        const Evidence& evidence) {
    return entropy(posterior_marginal(net, var, evidence));
}

BayesNet discretize(const BayesNet& net, const std::string& var,
                    const std::vector<std::vector<std::string>>& partition) {
    const std::size_t vi = net.index_of(var);
    const BnVariable& v = net.variables()[vi];

    // The partition must cover every state exactly once.
    std::vector<int> group_of(v.states.size(), -1);
    for (std::size_t g = 0; g < partition.size(); ++g) {
        if (partition[g].empty()) {
            throw Error(ErrorCode::InvalidPartition, "empty state group");
        }
        for (const std::string& s : partition[g]) {
            const std::size_t si = state_index(v, s);
            if (group_of[si] >= 0) {
                throw Error(ErrorCode::InvalidPartition,
                            "state '" + s + "' appears in two groups");
            }
            group_of[si] = static_cast<int>(g);
        }
    }
    for (std::size_t si = 0; si < v.states.size(); ++si) {
        if (group_of[si] < 0) {
            throw Error(ErrorCode::InvalidPartition,
                        "state '" + v.states[si] + "' missing from the partition");
        }
    }

    // Weight of each original state inside its group: the variable's exact
    // marginal, which already averages the variable's own parents.
    const Distribution marg = posterior_marginal(net, var, {});
    std::vector<double> group_mass(partition.size(), 0.0);
    for (std::size_t si = 0; si < v.states.size(); ++si) {
        group_mass[static_cast<std::size_t>(group_of[si])] += marg[si];
    }
    std::vector<double> weight(v.states.size(), 0.0);
    for (std::size_t si = 0; si < v.states.size(); ++si) {
        const auto g = static_cast<std::size_t>(group_of[si]);
        weight[si] = group_mass[g] > 0.0
                         ? marg[si] / group_mass[g]
                         : 1.0 / static_cast<double>(partition[g].size());
    }

    std::vector<std::string> new_states;
    for (const auto& grp : partition) {
        std::string label = grp.front();
        for (std::size_t t = 1; t < grp.size(); ++t) label += "|" + grp[t];
        new_states.push_back(label);
    }

    std::vector<BnVariable> out;
    for (const BnVariable& w : net.variables()) {
        BnVariable nv;
        nv.name = w.name;
        nv.parents = w.parents;
        if (w.name == var) {
            nv.states = new_states;
            nv.cpt = Matrix(w.cpt.rows, partition.size());
            for (std::size_t r = 0; r < w.cpt.rows; ++r) {
                for (std::size_t c = 0; c < w.cpt.cols; ++c) {
                    nv.cpt.at(r, static_cast<std::size_t>(group_of[c])) +=
                        w.cpt.at(r, c);
                }
            }
        } else {
            nv.states = w.states;
            const auto pit = std::find(w.parents.begin(), w.parents.end(), var);
            if (pit == w.parents.end()) {
                nv.cpt = w.cpt;
            } else {
                // Rebuild rows over the merged parent configurations.
                const auto ppos =
                    static_cast<std::size_t>(pit - w.parents.begin());
                std::vector<std::size_t> card;
                for (const std::string& pname : w.parents) {
                    card.push_back(
                        net.variables()[net.index_of(pname)].states.size());
                }
                std::vector<std::size_t> new_card = card;
                new_card[ppos] = partition.size();
                std::size_t new_rows = 1;
                for (std::size_t c : new_card) new_rows *= c;
                nv.cpt = Matrix(new_rows, w.states.size());

                std::vector<std::size_t> cfg(card.size(), 0);
                const std::size_t old_rows = w.cpt.rows;
                for (std::size_t r = 0; r < old_rows; ++r) {
                    // decode row-major config (first parent slowest)
                    std::size_t rem = r;
                    for (std::size_t t = card.size(); t-- > 0;) {
                        cfg[t] = rem % card[t];
                        rem /= card[t];
                    }
                    const std::size_t si = cfg[ppos];
                    const auto g = static_cast<std::size_t>(group_of[si]);
                    std::size_t nr = 0;
                    for (std::size_t t = 0; t < card.size(); ++t) {
                        nr = nr * new_card[t] + (t == ppos ? g : cfg[t]);
                    }
                    for (std::size_t c = 0; c < w.states.size(); ++c) {
                        nv.cpt.at(nr, c) += weight[si] * w.cpt.at(r, c);
                    }
                }
            }
        }
        out.push_back(std::move(nv));
    }
    return BayesNet::validate(std::move(out));
}

ContingencyTable ContingencyTable::from_rows(
    std::vector<std::string> variables, std::vector<std::vector<std::string>> rows,
    std::vector<double> counts) {
    if (variables.empty()) {
        throw Error(ErrorCode::ParseError, "counts table has no variables");
    }
    if (rows.size() != counts.size()) {
        throw Error(ErrorCode::ShapeMismatch, "row/count length mismatch");
    }
    ContingencyTable t;
    t.vars_ = std::move(variables);
    t.states_.resize(t.vars_.size());
    t.row_states_.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != t.vars_.size()) {
            throw Error(ErrorCode::ParseError, "counts row has wrong arity");
        }
        if (counts[r] < 0.0) {
            throw Error(ErrorCode::NegativeMass, "negative count");
        }
        std::vector<std::size_t> idx(t.vars_.size());
        for (std::size_t c = 0; c < t.vars_.size(); ++c) {
            auto& st = t.states_[c];
            const auto it = std::find(st.begin(), st.end(), rows[r][c]);
            if (it == st.end()) {
                idx[c] = st.size();
                st.push_back(rows[r][c]);
            } else {
                idx[c] = static_cast<std::size_t>(it - st.begin());
            }
        }
        t.row_states_.push_back(std::move(idx));
    }
    t.counts_ = std::move(counts);
    return t;
}

const std::vector<std::string>& ContingencyTable::states_of(
    const std::string& var) const {
    for (std::size_t c = 0; c < vars_.size(); ++c) {
        if (vars_[c] == var) return states_[c];
    }
    throw Error(ErrorCode::UnknownVariable, "unknown variable '" + var + "'");
}

JointDistribution ContingencyTable::joint_xy(const std::string& x_var,
                                             const std::string& y_var,
                                             const Evidence& evidence) const {
    auto col_of = [&](const std::string& name) {
        for (std::size_t c = 0; c < vars_.size(); ++c) {
            if (vars_[c] == name) return c;
        }
        throw Error(ErrorCode::UnknownVariable, "unknown variable '" + name + "'");
    };
    const std::size_t xc = col_of(x_var);
    const std::size_t yc = col_of(y_var);
    if (xc == yc) {
        throw Error(ErrorCode::OutOfRange, "x and y must be distinct variables");
    }
    std::vector<std::pair<std::size_t, std::size_t>> filters;
    for (const auto& [name, state] : evidence) {
        const std::size_t c = col_of(name);
        if (c == xc || c == yc) {
            throw Error(ErrorCode::OutOfRange, "query variable is fixed by evidence");
        }
        const auto& st = states_[c];
        const auto it = std::find(st.begin(), st.end(), state);
        if (it == st.end()) {
            throw Error(ErrorCode::UnknownVariable,
                        "variable '" + name + "' has no state '" + state + "'");
        }
        filters.emplace_back(c, static_cast<std::size_t>(it - st.begin()));
    }

    std::vector<std::vector<double>> p(states_[yc].size(),
                                       std::vector<double>(states_[xc].size(), 0.0));
    double total = 0.0;
    for (std::size_t r = 0; r < row_states_.size(); ++r) {
        bool keep = true;
        for (const auto& [c, s] : filters) {
            if (row_states_[r][c] != s) {
                keep = false;
                break;
            }
        }
        if (!keep) continue;
        p[row_states_[r][yc]][row_states_[r][xc]] += counts_[r];
        total += counts_[r];
    }
    if (total <= 0.0) {
        throw Error(ErrorCode::ZeroEvidenceProbability,
                    "no counts match the evidence");
    }
    for (auto& row : p) {
        for (double& v : row) v /= total;
    }
    return JointDistribution::validate(std::move(p), states_[xc], states_[yc]);
}

}  // namespace cbound
