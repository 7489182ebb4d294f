#include "meshlab/mesh.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace meshlab {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw std::domain_error(std::string(what) + " must be finite");
    }
}

std::string coord_str(CellCoord c) {
    std::ostringstream os;
    os << "(" << c.i << "," << c.j << ")";
    return os.str();
}

// Left-multiply m by a 2x2 operation acting on modes (a, b).
void apply_two_mode(TransferMatrix& m, int a, int b, const Eigen::Matrix2cd& op) {
    Eigen::RowVectorXcd ra = m.row(a);
    Eigen::RowVectorXcd rb = m.row(b);
    m.row(a) = op(0, 0) * ra + op(0, 1) * rb;
    m.row(b) = op(1, 0) * ra + op(1, 1) * rb;
}

}  // namespace

double fold_2pi(double x) {
    double y = std::fmod(x, 2.0 * kPi);
    if (y < 0.0) y += 2.0 * kPi;
    return y;
}

std::string topology_name(Topology t) {
    return t == Topology::blass ? "blass" : "triangular";
}

Topology topology_from_name(const std::string& name) {
    if (name == "blass") return Topology::blass;
    if (name == "triangular") return Topology::triangular;
    throw std::invalid_argument("unknown topology '" + name + "'");
}

TransferMatrix dc_matrix(double eta) {
    require_finite(eta, "eta");
    require(eta >= 0.0 && eta <= 1.0, "eta must lie in [0, 1]");
    TransferMatrix m(2, 2);
    const double t = std::sqrt(1.0 - eta);
    const double r = std::sqrt(eta);
    m << Cx(t, 0), Cx(0, r),
         Cx(0, r), Cx(t, 0);
    return m;
}

TransferMatrix mzi_matrix(double theta, const CouplerParams& dc1,
                          const CouplerParams& dc2) {
    require_finite(theta, "theta");
    TransferMatrix inner = TransferMatrix::Identity(2, 2);
    inner(0, 0) = std::exp(Cx(0, theta));
    return dc_matrix(dc2.eta) * inner * dc_matrix(dc1.eta);
}

SplitRange achievable_split_range(const CouplerParams& dc1,
                                  const CouplerParams& dc2) {
    require(dc1.eta >= 0.0 && dc1.eta <= 1.0 && dc2.eta >= 0.0 && dc2.eta <= 1.0,
            "eta must lie in [0, 1]");
    const double p = std::sqrt((1.0 - dc1.eta) * (1.0 - dc2.eta));
    const double q = std::sqrt(dc1.eta * dc2.eta);
    SplitRange r;
    r.bar_min = (p - q) * (p - q);
    r.bar_max = (p + q) * (p + q);  // <= 1 by Cauchy-Schwarz
    return r;
}

std::vector<CellCoord> cell_order(Topology t, int d) {
    require(d >= 2, "mesh dimension must be >= 2");
    std::vector<CellCoord> order;
    if (t == Topology::blass) {
        order.reserve(static_cast<size_t>(d) * d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) order.push_back({i, j});
    } else {
        order.reserve(static_cast<size_t>(d) * (d - 1) / 2);
        for (int c = 0; c <= d - 2; ++c)
            for (int r = d - 2; r >= c; --r) order.push_back({r, c});
    }
    return order;
}

std::pair<int, int> cell_modes(Topology t, int d, CellCoord cell) {
    if (t == Topology::blass) {
        require(cell.i >= 0 && cell.i < d && cell.j >= 0 && cell.j < d,
                "blass cell " + coord_str(cell) + " out of range");
        return {cell.i, d + cell.j};  // row line, column line
    }
    require(cell.j >= 0 && cell.j <= cell.i && cell.i <= d - 2,
            "triangular cell " + coord_str(cell) + " out of range");
    return {cell.i, cell.i + 1};
}

MeshConfig MeshConfig::ideal(Topology t, int d) {
    MeshConfig cfg;
    cfg.topology = t;
    cfg.d = d;
    for (CellCoord c : cell_order(t, d)) cfg.cells[c] = CellParams{};
    return cfg;
}

MeshConfig MeshConfig::sampled(Topology t, int d, const FabricationStats& stats,
                               std::uint64_t seed) {
    MeshConfig cfg;
    cfg.topology = t;
    cfg.d = d;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> eta_dist(stats.eta_mean, stats.eta_sd);
    std::normal_distribution<double> off_dist(stats.offset_mean, stats.offset_sd);
    std::normal_distribution<double> dcoef_dist(stats.dcoef_mean, stats.dcoef_sd);
    auto draw_eta = [&] { return std::clamp(eta_dist(rng), stats.eta_min, stats.eta_max); };
    auto draw_dcoef = [&] { return std::max(0.01, dcoef_dist(rng)); };
    for (CellCoord c : cell_order(t, d)) {
        CellParams p;
        p.dc1.eta = draw_eta();
        p.dc2.eta = draw_eta();
        p.phase_offset = fold_2pi(off_dist(rng));
        p.phase_range = stats.phase_range;
        p.heater_internal.c = p.phase_offset;
        p.heater_internal.d_coef = draw_dcoef();
        p.heater_external.c = fold_2pi(off_dist(rng));
        p.heater_external.d_coef = draw_dcoef();
        cfg.cells[c] = p;
    }
    return cfg;
}

MeshSettings MeshSettings::uniform(const MeshConfig& config, CellSetting s) {
    MeshSettings out;
    for (const auto& [coord, params] : config.cells) out.cells[coord] = s;
    return out;
}

ForwardResult forward(const MeshConfig& config, const MeshSettings& settings) {
    const int d = config.d;
    require(d >= 2, "mesh dimension must be >= 2");
    const auto order = cell_order(config.topology, d);
    require(config.cells.size() == order.size(),
            "config has " + std::to_string(config.cells.size()) + " cells, topology needs " +
                std::to_string(order.size()));
    require(settings.cells.size() == config.cells.size(),
            "settings and config cell sets differ in size");

    const int n_modes = config.topology == Topology::blass ? 2 * d : d;
    TransferMatrix full = TransferMatrix::Identity(n_modes, n_modes);

    for (CellCoord coord : order) {
        auto pit = config.cells.find(coord);
        require(pit != config.cells.end(), "config missing cell " + coord_str(coord));
        auto sit = settings.cells.find(coord);
        require(sit != settings.cells.end(), "settings missing cell " + coord_str(coord));
        const CellParams& p = pit->second;
        const CellSetting& s = sit->second;
        require_finite(s.theta, "theta");
        require_finite(s.phi, "phi");

        // 2x2 cell op: external phase on the first port, then the MZI.
        Eigen::Matrix2cd op = mzi_matrix(s.theta, p.dc1, p.dc2);
        const Cx ph = std::exp(Cx(0, s.phi));
        op(0, 0) *= ph;
        op(1, 0) *= ph;
        auto [a, b] = cell_modes(config.topology, d, coord);
        apply_two_mode(full, a, b, op);
    }

    if (settings.output_phases) {
        const auto& gamma = *settings.output_phases;
        require(static_cast<int>(gamma.size()) == d,
                "output_phases must have one entry per output mode");
        const int base = config.topology == Topology::blass ? d : 0;
        for (int k = 0; k < d; ++k) {
            require_finite(gamma[k], "output phase");
            full.row(base + k) *= std::exp(Cx(0, gamma[k]));
        }
    }

    ForwardResult res;
    res.full = full;
    res.effective = config.topology == Topology::blass ? full.block(d, 0, d, d)
                                                       : full;
    return res;
}

TransferMatrix apply_chip_loss(const TransferMatrix& t, const ChipLossModel& loss,
                               double uniform_path_cm, bool include_facets) {
    Eigen::MatrixXd path = Eigen::MatrixXd::Constant(t.rows(), t.cols(), uniform_path_cm);
    return apply_chip_loss(t, loss, path, include_facets);
}

TransferMatrix apply_chip_loss(const TransferMatrix& t, const ChipLossModel& loss,
                               const Eigen::MatrixXd& path_cm, bool include_facets) {
    require(path_cm.rows() == t.rows() && path_cm.cols() == t.cols(),
            "path length matrix must match transfer matrix dimensions");
    require(loss.prop_loss_db_per_cm >= 0.0 && loss.coupling_loss_db_per_facet >= 0.0,
            "loss coefficients must be non-negative");
    TransferMatrix out = t;
    const double facet_db = include_facets ? 2.0 * loss.coupling_loss_db_per_facet : 0.0;
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
        for (Eigen::Index c = 0; c < t.cols(); ++c) {
            const double len = path_cm(r, c);
            require(len >= 0.0 && std::isfinite(len), "path lengths must be non-negative");
            const double db = loss.prop_loss_db_per_cm * len + facet_db;
            out(r, c) *= std::pow(10.0, -db / 20.0);  // amplitude scaling
        }
    }
    return out;
}

bool is_unitary(const TransferMatrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    TransferMatrix g = m.adjoint() * m;
    g -= TransferMatrix::Identity(m.rows(), m.cols());
    return g.cwiseAbs().maxCoeff() < tol;
}

double max_singular_value(const TransferMatrix& m) {
    Eigen::JacobiSVD<TransferMatrix> svd(m);
    return svd.singularValues()(0);
}

}  // namespace meshlab
