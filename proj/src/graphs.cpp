#include "ericson/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>

#include <Eigen/SparseLU>

#include <json.hpp>

#include "ericson/error.hpp"

namespace ericson {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cdouble kI{0.0, 1.0};

void shuffle(std::vector<int>& v, CounterRng& rng) {
    for (std::size_t k = v.size(); k > 1; --k) {
        const auto j = static_cast<std::size_t>(rng.below(k));
        std::swap(v[k - 1], v[j]);
    }
}

// Graphs at least this large are factored as sparse matrices.
constexpr int kSparseVertexThreshold = 24;

} // namespace

GraphSpec::GraphSpec(int vertices, std::vector<Bond> bonds, std::vector<int> leads, double coupling)
    : vertices_(vertices), bonds_(std::move(bonds)), leads_(std::move(leads)), coupling_(coupling) {
    if (vertices_ < 1) throw DimensionError("graph needs at least one vertex");
    std::set<std::pair<int, int>> seen;
    for (auto& b : bonds_) {
        if (b.i > b.j) {
            std::swap(b.i, b.j);
            b.potential = -b.potential;
        }
        if (b.i < 0 || b.j >= vertices_) throw DomainError("bond vertex index out of range");
        if (b.i == b.j) throw DomainError("self-loops are not supported");
        if (!(b.length > 0.0)) throw DomainError("bond lengths must be positive");
        if (!std::isfinite(b.potential)) throw DomainError("vector potential must be finite");
        if (!seen.emplace(b.i, b.j).second) throw DomainError("duplicate bond");
    }
    std::sort(bonds_.begin(), bonds_.end(),
              [](const Bond& a, const Bond& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });

    std::set<int> unique_leads;
    for (int v : leads_) {
        if (v < 0 || v >= vertices_) throw DomainError("lead vertex out of range");
        if (!unique_leads.insert(v).second) throw DomainError("duplicate lead vertex");
    }
    // 0 < w / sqrt(pi) <= 1, with a few ulps of slack for w = sqrt(pi).
    if (!(coupling_ > 0.0) || coupling_ / std::sqrt(kPi) > 1.0 + 1e-12)
        throw DomainError("lead coupling must satisfy 0 < w <= sqrt(pi)");
}

double GraphSpec::total_length() const {
    double sum = 0.0;
    for (const auto& b : bonds_) sum += b.length;
    return sum;
}

std::vector<int> GraphSpec::degrees() const {
    std::vector<int> d(static_cast<std::size_t>(vertices_), 0);
    for (const auto& b : bonds_) {
        ++d[static_cast<std::size_t>(b.i)];
        ++d[static_cast<std::size_t>(b.j)];
    }
    return d;
}

bool GraphSpec::connected() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(vertices_));
    for (const auto& b : bonds_) {
        adj[static_cast<std::size_t>(b.i)].push_back(b.j);
        adj[static_cast<std::size_t>(b.j)].push_back(b.i);
    }
    std::vector<bool> seen(static_cast<std::size_t>(vertices_), false);
    std::queue<int> todo;
    todo.push(0);
    seen[0] = true;
    int reached = 1;
    while (!todo.empty()) {
        const int v = todo.front();
        todo.pop();
        for (int u : adj[static_cast<std::size_t>(v)]) {
            if (!seen[static_cast<std::size_t>(u)]) {
                seen[static_cast<std::size_t>(u)] = true;
                ++reached;
                todo.push(u);
            }
        }
    }
    return reached == vertices_;
}

Eigen::MatrixXi GraphSpec::connectivity() const {
    Eigen::MatrixXi c = Eigen::MatrixXi::Zero(vertices_, vertices_);
    for (const auto& b : bonds_) c(b.i, b.j) = c(b.j, b.i) = 1;
    return c;
}

Eigen::MatrixXd GraphSpec::lengths() const {
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(vertices_, vertices_);
    for (const auto& b : bonds_) l(b.i, b.j) = l(b.j, b.i) = b.length;
    return l;
}

Eigen::MatrixXd GraphSpec::potentials() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(vertices_, vertices_);
    for (const auto& b : bonds_) {
        a(b.i, b.j) = b.potential;
        a(b.j, b.i) = -b.potential;
    }
    return a;
}

GraphSpec GraphSpec::with_coupling(double w) const {
    return GraphSpec(vertices_, bonds_, leads_, w);
}

GraphSpec GraphSpec::with_uniform_potential(double value) const {
    auto bonds = bonds_;
    for (auto& b : bonds) b.potential = value;
    return GraphSpec(vertices_, std::move(bonds), leads_, coupling_);
}

GraphSpec GraphSpec::with_leads(std::vector<int> leads) const {
    return GraphSpec(vertices_, bonds_, std::move(leads), coupling_);
}

std::vector<int> first_primes(std::size_t count) {
    std::vector<int> primes;
    primes.reserve(count);
    for (int n = 2; primes.size() < count; ++n) {
        bool prime = true;
        for (int p : primes) {
            if (p * p > n) break;
            if (n % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) primes.push_back(n);
    }
    return primes;
}

GraphSpec make_tetrahedron(double w, std::pair<int, int> leads, std::span<const int> primes) {
    if (leads.first == leads.second) throw DomainError("lead vertices must be distinct");
    std::vector<int> chosen = primes.empty() ? first_primes(6)
                                             : std::vector<int>(primes.begin(), primes.end());
    if (chosen.size() != 6) throw DomainError("tetrahedron needs exactly six primes");
    if (std::set<int>(chosen.begin(), chosen.end()).size() != 6)
        throw DomainError("tetrahedron primes must be distinct");
    std::vector<Bond> bonds;
    std::size_t k = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            bonds.push_back({i, j, std::sqrt(static_cast<double>(chosen[k++])), 0.0});
    return GraphSpec(4, std::move(bonds), {leads.first, leads.second}, w);
}

GraphSpec make_random_regular(int vertices, int degree, const RngPlan& plan, int lead_count,
                              double w, int max_attempts) {
    if (vertices < 2 || degree < 1 || degree >= vertices)
        throw DomainError("invalid regular graph size");
    if ((vertices * degree) % 2 != 0) throw DomainError("V * degree must be even");
    if (lead_count < 1 || lead_count > vertices) throw DomainError("lead count out of range");

    CounterRng rng(plan, Stream::graph);
    const int bond_count = vertices * degree / 2;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<int> stubs;
        stubs.reserve(static_cast<std::size_t>(vertices * degree));
        for (int v = 0; v < vertices; ++v)
            for (int k = 0; k < degree; ++k) stubs.push_back(v);
        shuffle(stubs, rng);

        std::set<std::pair<int, int>> edges;
        bool simple = true;
        for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
            auto a = stubs[k];
            auto b = stubs[k + 1];
            if (a == b) {
                simple = false;
                break;
            }
            if (a > b) std::swap(a, b);
            if (!edges.emplace(a, b).second) {
                simple = false;
                break;
            }
        }
        if (!simple) continue;

        const auto primes = first_primes(static_cast<std::size_t>(2 * bond_count));
        std::vector<int> lengths;
        for (std::size_t k = 0; k < primes.size(); k += 2) lengths.push_back(primes[k]);
        shuffle(lengths, rng);

        std::vector<Bond> bonds;
        std::size_t k = 0;
        for (const auto& [a, b] : edges)
            bonds.push_back({a, b, std::sqrt(static_cast<double>(lengths[k++])), 0.0});

        GraphSpec trial(vertices, std::move(bonds), {}, w);
        if (!trial.connected()) continue;

        CounterRng lead_rng(plan, Stream::leads);
        std::vector<int> all(static_cast<std::size_t>(vertices));
        for (int v = 0; v < vertices; ++v) all[static_cast<std::size_t>(v)] = v;
        shuffle(all, lead_rng);
        std::vector<int> leads(all.begin(), all.begin() + lead_count);
        std::sort(leads.begin(), leads.end());
        return trial.with_leads(std::move(leads));
    }
    throw Error("no connected simple regular graph found within the retry bound");
}

namespace {

struct BondTerms {
    double cot;
    cdouble hop;
};

BondTerms bond_terms(const GraphSpec& spec, std::size_t k, double f) {
    const Bond& b = spec.bonds()[k];
    const double phase = 2.0 * kPi * f * b.length;
    const double s = std::sin(phase);
    if (std::abs(s) < kSingularityGuard) {
        std::ostringstream msg;
        msg << "frequency " << f << " is singular on bond " << k << " (" << b.i << ", " << b.j << ")";
        throw SingularityError(msg.str(), static_cast<int>(k));
    }
    return {std::cos(phase) / s, std::exp(-kI * (b.potential * b.length)) / s};
}

// Evaluates S(f) for one graph at many frequencies. Large graphs keep a sparse
// matrix whose pattern is analyzed once and refactored per frequency.
class GraphScatterer {
public:
    explicit GraphScatterer(const GraphSpec& spec)
        : spec_(spec), sparse_(spec.vertices() >= kSparseVertexThreshold),
          lead_scale_(spec.coupling() * spec.coupling() / kPi) {
        const int v = spec.vertices();
        const int m = spec.channels();
        if (m == 0) throw DomainError("graph has no leads");
        rhs_ = Eigen::MatrixXcd::Zero(v, m);
        for (int c = 0; c < m; ++c) rhs_(spec.leads()[c], c) = 1.0;
        if (!sparse_) return;
        std::vector<Eigen::Triplet<cdouble>> pattern;
        for (int i = 0; i < v; ++i) pattern.emplace_back(i, i, 0.0);
        for (const Bond& b : spec.bonds()) {
            pattern.emplace_back(b.i, b.j, 0.0);
            pattern.emplace_back(b.j, b.i, 0.0);
        }
        a_.resize(v, v);
        a_.setFromTriplets(pattern.begin(), pattern.end());
        a_.makeCompressed();
        for (int i = 0; i < v; ++i) diagonal_.push_back(&a_.coeffRef(i, i));
        for (const Bond& b : spec.bonds()) {
            upper_.push_back(&a_.coeffRef(b.i, b.j));
            lower_.push_back(&a_.coeffRef(b.j, b.i));
        }
        lu_.analyzePattern(a_);
    }

    Eigen::MatrixXcd s_matrix(double f) {
        const int m = spec_.channels();
        Eigen::MatrixXcd x;
        if (sparse_) {
            std::fill(a_.valuePtr(), a_.valuePtr() + a_.nonZeros(), cdouble{0.0, 0.0});
            for (int lead : spec_.leads()) *diagonal_[static_cast<std::size_t>(lead)] += kI * kPi * lead_scale_;
            for (std::size_t k = 0; k < spec_.bonds().size(); ++k) {
                const Bond& b = spec_.bonds()[k];
                const BondTerms t = bond_terms(spec_, k, f);
                *diagonal_[static_cast<std::size_t>(b.i)] -= t.cot;
                *diagonal_[static_cast<std::size_t>(b.j)] -= t.cot;
                *upper_[k] = t.hop;
                *lower_[k] = std::conj(t.hop);
            }
            lu_.factorize(a_);
            if (lu_.info() != Eigen::Success) {
                std::ostringstream msg;
                msg << "graph matrix is singular at frequency " << f;
                throw SingularityError(msg.str(), -1);
            }
            x = lu_.solve(rhs_);
        } else {
            Eigen::MatrixXcd a = graph_hamiltonian(spec_, f).h;
            for (int lead : spec_.leads()) a(lead, lead) += kI * kPi * lead_scale_;
            x = Eigen::PartialPivLU<Eigen::MatrixXcd>(a).solve(rhs_);
        }
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) s(a, b) -= 2.0 * kPi * kI * lead_scale_ * x(spec_.leads()[a], b);
        return s;
    }

private:
    const GraphSpec& spec_;
    bool sparse_;
    double lead_scale_;
    Eigen::MatrixXcd rhs_;
    Eigen::SparseMatrix<cdouble> a_;
    std::vector<cdouble*> diagonal_;
    std::vector<cdouble*> upper_;
    std::vector<cdouble*> lower_;
    Eigen::SparseLU<Eigen::SparseMatrix<cdouble>, Eigen::COLAMDOrdering<int>> lu_;
};

// Phase increment of det S between two frequencies, bisecting until every
// sub-step turns the phase by less than a quarter turn. Singular points are
// nudged aside.
double winding_between(GraphScatterer& scatterer, double f0, cdouble d0, double f1, cdouble d1,
                       int depth) {
    const double turn = std::arg(d1 / d0);
    if (std::abs(turn) < 0.5 * kPi || depth == 0) return turn;
    double mid = 0.5 * (f0 + f1);
    cdouble dm;
    for (int attempt = 0;; ++attempt) {
        try {
            dm = scatterer.s_matrix(mid).determinant();
            break;
        } catch (const SingularityError&) {
            if (attempt == 8) return turn;
            mid += (f1 - f0) * 1e-3;
        }
    }
    return winding_between(scatterer, f0, d0, mid, dm, depth - 1) +
           winding_between(scatterer, mid, dm, f1, d1, depth - 1);
}

} // namespace

GraphHamiltonianValue graph_hamiltonian(const GraphSpec& spec, double f) {
    const int v = spec.vertices();
    GraphHamiltonianValue out{f, Eigen::MatrixXcd::Zero(v, v)};
    for (std::size_t k = 0; k < spec.bonds().size(); ++k) {
        const Bond& b = spec.bonds()[k];
        const BondTerms t = bond_terms(spec, k, f);
        out.h(b.i, b.i) -= t.cot;
        out.h(b.j, b.j) -= t.cot;
        out.h(b.i, b.j) = t.hop;
        out.h(b.j, b.i) = std::conj(t.hop);
    }
    return out;
}

Eigen::MatrixXcd graph_s_matrix(const GraphSpec& spec, double f) {
    return GraphScatterer(spec).s_matrix(f);
}

SMatrixSpectrum graph_sweep(const GraphSpec& spec, std::span<const double> fgrid,
                            std::vector<ChannelPair> channels) {
    if (fgrid.empty()) throw DomainError("sweep grid is empty");
    for (std::size_t i = 1; i < fgrid.size(); ++i)
        if (!(fgrid[i] > fgrid[i - 1])) throw DomainError("sweep grid must be strictly increasing");
    const int m = spec.channels();
    if (channels.empty()) channels = all_channels(m);
    for (const auto& [a, b] : channels)
        if (a < 0 || b < 0 || a >= m || b >= m) throw DomainError("channel index outside the S-matrix");

    GraphScatterer scatterer(spec);
    SMatrixSpectrum out;
    out.unit = AbscissaUnit::frequency;
    out.channel_count = m;
    out.channels = std::move(channels);
    out.metadata.model = "graph";
    out.grid.reserve(fgrid.size());
    out.values.reserve(fgrid.size() * out.channels.size());
    for (double f : fgrid) {
        Eigen::MatrixXcd s;
        try {
            s = scatterer.s_matrix(f);
        } catch (const SingularityError&) {
            out.metadata.skipped.push_back(f);
            continue;
        }
        out.grid.push_back(f);
        for (const auto& [a, b] : out.channels) out.values.push_back(s(a, b));
    }
    if (static_cast<double>(out.metadata.skipped.size()) > 0.01 * static_cast<double>(fgrid.size())) {
        std::ostringstream msg;
        msg << out.metadata.skipped.size() << " of " << fgrid.size()
            << " grid points hit bond singularities";
        throw Error(msg.str());
    }
    return out;
}

double measure_resonance_density(const GraphSpec& spec, double f_lo, double f_hi,
                                 std::size_t samples) {
    if (!(f_hi > f_lo) || samples < 2) throw DomainError("invalid density measurement range");
    const double step = (f_hi - f_lo) / static_cast<double>(samples - 1);
    double winding = 0.0;
    cdouble previous{0.0, 0.0};
    double previous_f = f_lo;
    bool have_previous = false;
    GraphScatterer scatterer(spec);
    for (std::size_t k = 0; k < samples; ++k) {
        const double f = f_lo + step * static_cast<double>(k);
        cdouble det;
        try {
            det = scatterer.s_matrix(f).determinant();
        } catch (const SingularityError&) {
            continue;
        }
        if (have_previous) winding += winding_between(scatterer, previous_f, previous, f, det, 40);
        previous = det;
        previous_f = f;
        have_previous = true;
    }
    return std::abs(winding) / (2.0 * kPi * (f_hi - f_lo));
}

std::string graph_to_json(const GraphSpec& spec) {
    nlohmann::json j;
    j["V"] = spec.vertices();
    j["w"] = spec.coupling();
    j["leads"] = spec.leads();
    nlohmann::json bonds = nlohmann::json::array();
    for (const auto& b : spec.bonds())
        bonds.push_back({{"i", b.i}, {"j", b.j}, {"length", b.length}, {"A", b.potential}});
    j["bonds"] = std::move(bonds);
    return j.dump(2);
}

GraphSpec graph_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        std::vector<Bond> bonds;
        for (const auto& b : j.at("bonds"))
            bonds.push_back({b.at("i").get<int>(), b.at("j").get<int>(), b.at("length").get<double>(),
                             b.value("A", 0.0)});
        return GraphSpec(j.at("V").get<int>(), std::move(bonds), j.at("leads").get<std::vector<int>>(),
                         j.at("w").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed graph JSON: ") + e.what());
    }
}

} // namespace ericson
