#include "rcomp/expr.hpp"

#include <cmath>

namespace rcomp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_dim(std::size_t got, std::size_t want, const std::string& what) {
    if (got != want)
        fail(ErrorKind::DimensionMismatch,
             what + ": got dim " + std::to_string(got) + ", expected " + std::to_string(want));
}

void check_valid(const Expr& e, const char* what) {
    if (!e.valid()) fail(ErrorKind::InvalidArgument, std::string(what) + ": empty expression");
}

void check_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::InvalidArgument, std::string(what) + " must be positive");
}

void check_mix_terms(const std::vector<Expr::MixTerm>& terms, const char* what) {
    if (terms.empty()) fail(ErrorKind::InvalidArgument, std::string(what) + " needs at least one term");
    for (const auto& t : terms) {
        check_positive(t.alpha, "mixture weight");
        check_valid(t.b, what);
        check_dim(t.l.rows(), t.b.dim(), std::string(what) + " L_k rows vs B_k");
        check_dim(t.l.cols(), terms.front().l.cols(), std::string(what) + " L_k domain");
    }
}

}  // namespace

void check_gamma(double gamma, const char* where) {
    if (!(gamma >= kGammaMin && gamma <= kGammaMax))
        fail(ErrorKind::InvalidGamma, std::string(where) + ": gamma " + std::to_string(gamma) +
                                          " outside [1e-8, 1e8]");
}

const Node& Expr::node() const {
    if (!p_) fail(ErrorKind::InvalidArgument, "empty expression");
    return *p_;
}

std::size_t Expr::dim() const { return node().dim; }

Expr Expr::leaf(Atom a) {
    std::size_t d = a.dim();
    return Expr(std::make_shared<const Node>(Node{LeafNode{std::move(a)}, d}));
}

Expr Expr::inverse(Expr a) {
    check_valid(a, "inverse");
    std::size_t d = a.dim();
    return Expr(std::make_shared<const Node>(Node{InverseNode{std::move(a)}, d}));
}

Expr Expr::scale_left(double rho, Expr a) {
    check_valid(a, "scale_left");
    check_positive(rho, "scale_left rho");
    std::size_t d = a.dim();
    return Expr(std::make_shared<const Node>(Node{ScaleLeftNode{rho, std::move(a)}, d}));
}

Expr Expr::scale_right(Expr a, double rho) {
    check_valid(a, "scale_right");
    check_positive(rho, "scale_right rho");
    std::size_t d = a.dim();
    return Expr(std::make_shared<const Node>(Node{ScaleRightNode{std::move(a), rho}, d}));
}

Expr Expr::translate_out(Expr a, Vector z) {
    check_valid(a, "translate_out");
    check_dim(z.size(), a.dim(), "translate_out z");
    std::size_t d = a.dim();
    return Expr(std::make_shared<const Node>(Node{TranslateOutNode{std::move(a), std::move(z)}, d}));
}

Expr Expr::translate_in(Expr a, Vector w) {
    check_valid(a, "translate_in");
    check_dim(w.size(), a.dim(), "translate_in w");
    std::size_t d = a.dim();
    return Expr(std::make_shared<const Node>(Node{TranslateInNode{std::move(a), std::move(w)}, d}));
}

Expr Expr::add_scaled_id(Expr a, double rho) {
    check_valid(a, "add_scaled_id");
    if (!(rho >= 0.0) || !std::isfinite(rho)) fail(ErrorKind::InvalidArgument, "add_scaled_id rho must be >= 0");
    std::size_t d = a.dim();
    return Expr(std::make_shared<const Node>(Node{AddScaledIdNode{std::move(a), rho}, d}));
}

Expr Expr::yosida(Expr a, double lambda) {
    check_valid(a, "yosida");
    check_positive(lambda, "yosida lambda");
    std::size_t d = a.dim();
    return Expr(std::make_shared<const Node>(Node{YosidaNode{std::move(a), lambda}, d}));
}

Expr Expr::compose(LinearMap l, double gamma, Expr b) {
    check_valid(b, "compose");
    check_gamma(gamma, "compose");
    check_dim(l.rows(), b.dim(), "compose L rows vs B");
    std::size_t d = l.cols();
    return Expr(std::make_shared<const Node>(Node{ComposeNode{std::move(l), gamma, std::move(b)}, d}));
}

Expr Expr::cocompose(LinearMap l, double gamma, Expr b) {
    check_valid(b, "cocompose");
    check_gamma(gamma, "cocompose");
    check_dim(l.rows(), b.dim(), "cocompose L rows vs B");
    std::size_t d = l.cols();
    return Expr(std::make_shared<const Node>(Node{CocomposeNode{std::move(l), gamma, std::move(b)}, d}));
}

Expr Expr::mixture(double gamma, std::vector<MixTerm> terms) {
    check_gamma(gamma, "mixture");
    check_mix_terms(terms, "mixture");
    std::size_t d = terms.front().l.cols();
    return Expr(std::make_shared<const Node>(Node{MixtureNode{gamma, std::move(terms)}, d}));
}

Expr Expr::comixture(double gamma, std::vector<MixTerm> terms) {
    check_gamma(gamma, "comixture");
    check_mix_terms(terms, "comixture");
    std::size_t d = terms.front().l.cols();
    return Expr(std::make_shared<const Node>(Node{ComixtureNode{gamma, std::move(terms)}, d}));
}

Expr Expr::average(double gamma, std::vector<AvgTerm> terms) {
    check_gamma(gamma, "average");
    if (terms.empty()) fail(ErrorKind::InvalidArgument, "average needs at least one term");
    double total = 0.0;
    for (const auto& t : terms) {
        check_positive(t.alpha, "average weight");
        check_valid(t.b, "average");
        check_dim(t.b.dim(), terms.front().b.dim(), "average operand");
        total += t.alpha;
    }
    if (std::abs(total - 1.0) > 1e-12) fail(ErrorKind::InvalidArgument, "average weights must sum to 1");
    std::size_t d = terms.front().b.dim();
    return Expr(std::make_shared<const Node>(Node{AverageNode{gamma, std::move(terms)}, d}));
}

Expr Expr::douglas_rachford(Expr a1, Expr a2) {
    check_valid(a1, "douglas_rachford");
    check_valid(a2, "douglas_rachford");
    check_dim(a2.dim(), a1.dim(), "douglas_rachford operands");
    std::size_t d = a1.dim();
    return Expr(std::make_shared<const Node>(Node{DouglasRachfordNode{std::move(a1), std::move(a2)}, d}));
}

LinearMap chain_map(std::size_t p, std::size_t k) {
    DenseMatrix m(p * k, (p - 1) * k);
    for (std::size_t b = 0; b + 1 < p; ++b)
        for (std::size_t i = 0; i < k; ++i) {
            m(b * k + i, b * k + i) = 1.0;
            m((b + 1) * k + i, b * k + i) = -1.0;
        }
    return LinearMap(std::move(m));
}

Expr Expr::chain(double gamma, std::vector<Expr> ops) {
    check_gamma(gamma, "chain");
    if (ops.size() < 2) fail(ErrorKind::InvalidArgument, "chain needs p >= 2 operators");
    for (const auto& a : ops) {
        check_valid(a, "chain");
        check_dim(a.dim(), ops.front().dim(), "chain operand");
    }
    std::size_t k = ops.front().dim();
    std::size_t p = ops.size();
    if (p * k > kMaxDim) fail(ErrorKind::InvalidArgument, "chain product space exceeds 64");
    return Expr(std::make_shared<const Node>(Node{ChainNode{gamma, std::move(ops), chain_map(p, k)}, (p - 1) * k}));
}

Expr Expr::weighted_compose(LinearMap l, double gamma, Expr b, WeightedMode mode) {
    check_valid(b, "weighted_compose");
    check_gamma(gamma, "weighted_compose");
    check_dim(l.rows(), b.dim(), "weighted_compose L rows vs B");
    DenseMatrix pinv = pseudo_inverse(l);
    InnerProduct ip = InnerProduct::weighted(l);
    std::size_t d = l.cols();
    return Expr(std::make_shared<const Node>(
        Node{WeightedComposeNode{std::move(l), gamma, std::move(b), mode, std::move(pinv), std::move(ip)}, d}));
}

Expr Expr::psi_lift(LinearMap l, double gamma, Expr b) {
    check_valid(b, "psi_lift");
    check_gamma(gamma, "psi_lift");
    check_dim(l.rows(), b.dim(), "psi_lift L rows vs B");
    double nl = operator_norm(l);
    if (!(nl < 1.0 - 1e-9)) fail(ErrorKind::InvalidArgument, "psi_lift needs ||L|| < 1, got " + std::to_string(nl));
    const DenseMatrix& m = l.matrix();
    DenseMatrix psi = msub(DenseMatrix::identity(m.rows()), matmul(m, m.transpose()));
    DenseMatrix root = sqrt_psd(psi);
    LinearMap lifted(hcat(m, root));
    std::size_t d = l.cols() + l.rows();
    if (d > kMaxDim) fail(ErrorKind::InvalidArgument, "psi_lift space exceeds 64");
    return Expr(std::make_shared<const Node>(
        Node{PsiLiftNode{std::move(l), gamma, std::move(b), std::move(root), std::move(lifted)}, d}));
}

Expr Expr::product(std::vector<Expr> blocks) {
    if (blocks.empty()) fail(ErrorKind::InvalidArgument, "product needs at least one block");
    std::size_t d = 0;
    for (const auto& b : blocks) {
        check_valid(b, "product");
        d += b.dim();
    }
    if (d > kMaxDim) fail(ErrorKind::InvalidArgument, "product space exceeds 64");
    return Expr(std::make_shared<const Node>(Node{ProductNode{std::move(blocks)}, d}));
}

Expr Expr::parallel_compose(LinearMap l, Expr b) {
    check_valid(b, "parallel_compose");
    check_dim(l.rows(), b.dim(), "parallel_compose L rows vs B");
    std::size_t d = l.cols();
    return Expr(std::make_shared<const Node>(Node{ParallelComposeNode{std::move(l), std::move(b)}, d}));
}

Expr Expr::standard_compose(LinearMap l, Expr b) {
    check_valid(b, "standard_compose");
    check_dim(l.rows(), b.dim(), "standard_compose L rows vs B");
    const DenseMatrix& m = l.matrix();
    DenseMatrix mmt = matmul(m, m.transpose());
    double mu = mmt(0, 0);
    double defect = max_abs_diff(mmt, mscale(mu, DenseMatrix::identity(m.rows())));
    if (!(mu > 0.0) || defect > LinearMap::kClassTol * std::max(1.0, mu)) mu = 0.0;
    std::size_t d = l.cols();
    return Expr(std::make_shared<const Node>(Node{StandardComposeNode{std::move(l), std::move(b), mu}, d}));
}

std::string Expr::kind() const {
    return std::visit(overloaded{[](const LeafNode&) { return "leaf"; },
                                 [](const InverseNode&) { return "inverse"; },
                                 [](const ScaleLeftNode&) { return "scale_left"; },
                                 [](const ScaleRightNode&) { return "scale_right"; },
                                 [](const TranslateOutNode&) { return "translate_out"; },
                                 [](const TranslateInNode&) { return "translate_in"; },
                                 [](const AddScaledIdNode&) { return "add_scaled_id"; },
                                 [](const YosidaNode&) { return "yosida"; },
                                 [](const ComposeNode&) { return "compose"; },
                                 [](const CocomposeNode&) { return "cocompose"; },
                                 [](const MixtureNode&) { return "mixture"; },
                                 [](const ComixtureNode&) { return "comixture"; },
                                 [](const AverageNode&) { return "average"; },
                                 [](const DouglasRachfordNode&) { return "douglas_rachford"; },
                                 [](const ChainNode&) { return "chain"; },
                                 [](const WeightedComposeNode&) { return "weighted_compose"; },
                                 [](const PsiLiftNode&) { return "psi_lift"; },
                                 [](const ProductNode&) { return "product"; },
                                 [](const ParallelComposeNode&) { return "parallel_compose"; },
                                 [](const StandardComposeNode&) { return "standard_compose"; }},
                      node().v);
}

std::optional<double> Expr::native_gamma() const {
    return std::visit(overloaded{[](const ComposeNode& n) -> std::optional<double> { return n.gamma; },
                                 [](const CocomposeNode& n) -> std::optional<double> { return n.gamma; },
                                 [](const MixtureNode& n) -> std::optional<double> { return n.gamma; },
                                 [](const ComixtureNode& n) -> std::optional<double> { return n.gamma; },
                                 [](const AverageNode& n) -> std::optional<double> { return n.gamma; },
                                 [](const DouglasRachfordNode&) -> std::optional<double> { return 1.0; },
                                 [](const ChainNode& n) -> std::optional<double> { return n.gamma; },
                                 [](const WeightedComposeNode& n) -> std::optional<double> { return n.gamma; },
                                 [](const PsiLiftNode& n) -> std::optional<double> { return n.gamma; },
                                 [](const auto&) -> std::optional<double> { return std::nullopt; }},
                      node().v);
}

}  // namespace rcomp
