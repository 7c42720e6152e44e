#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rcomp/linalg.hpp"
#include "rcomp/operators.hpp"

namespace rcomp {

constexpr double kGammaMin = 1e-8;
constexpr double kGammaMax = 1e8;

void check_gamma(double gamma, const char* where);

struct Node;

// Immutable operator expression; the operator is only ever touched through its resolvent.
class Expr {
public:
    Expr() = default;

    static Expr leaf(Atom a);
    static Expr inverse(Expr a);
    static Expr scale_left(double rho, Expr a);   // rho A
    static Expr scale_right(Expr a, double rho);  // A(rho Id)
    static Expr translate_out(Expr a, Vector z);  // A - z
    static Expr translate_in(Expr a, Vector w);   // A(. - w)
    static Expr add_scaled_id(Expr a, double rho);
    static Expr yosida(Expr a, double lambda);
    static Expr compose(LinearMap l, double gamma, Expr b);
    static Expr cocompose(LinearMap l, double gamma, Expr b);

    struct MixTerm;
    struct AvgTerm;
    static Expr mixture(double gamma, std::vector<MixTerm> terms);
    static Expr comixture(double gamma, std::vector<MixTerm> terms);
    static Expr average(double gamma, std::vector<AvgTerm> terms);
    static Expr douglas_rachford(Expr a1, Expr a2);
    static Expr chain(double gamma, std::vector<Expr> ops);
    enum class WeightedMode { Plain, Co };
    static Expr weighted_compose(LinearMap l, double gamma, Expr b, WeightedMode mode);
    static Expr psi_lift(LinearMap l, double gamma, Expr b);
    // block-diagonal operator on the direct sum
    static Expr product(std::vector<Expr> blocks);
    // L^* |> B, resolvent available when L is a coisometry
    static Expr parallel_compose(LinearMap l, Expr b);
    // L^* o B o L, resolvent available when L L^* = mu Id
    static Expr standard_compose(LinearMap l, Expr b);

    bool valid() const { return static_cast<bool>(p_); }
    const Node& node() const;
    std::size_t dim() const;
    std::string kind() const;
    // parameter at which the node has a closed-form resolvent, if any
    std::optional<double> native_gamma() const;

private:
    explicit Expr(std::shared_ptr<const Node> p) : p_(std::move(p)) {}
    std::shared_ptr<const Node> p_;
};

struct Expr::MixTerm {
    double alpha;
    LinearMap l;
    Expr b;
};
struct Expr::AvgTerm {
    double alpha;
    Expr b;
};

struct LeafNode {
    Atom atom;
};
struct InverseNode {
    Expr arg;
};
struct ScaleLeftNode {
    double rho;
    Expr arg;
};
struct ScaleRightNode {
    Expr arg;
    double rho;
};
struct TranslateOutNode {
    Expr arg;
    Vector z;
};
struct TranslateInNode {
    Expr arg;
    Vector w;
};
struct AddScaledIdNode {
    Expr arg;
    double rho;
};
struct YosidaNode {
    Expr arg;
    double lambda;
};
struct ComposeNode {
    LinearMap l;
    double gamma;
    Expr b;
};
struct CocomposeNode {
    LinearMap l;
    double gamma;
    Expr b;
};
struct MixtureNode {
    double gamma;
    std::vector<Expr::MixTerm> terms;
};
struct ComixtureNode {
    double gamma;
    std::vector<Expr::MixTerm> terms;
};
struct AverageNode {
    double gamma;
    std::vector<Expr::AvgTerm> terms;
};
struct DouglasRachfordNode {
    Expr a1, a2;
};
struct ChainNode {
    double gamma;
    std::vector<Expr> ops;
    LinearMap l;  // block bidiagonal (p x (p-1)) map
};
struct WeightedComposeNode {
    LinearMap l;
    double gamma;
    Expr b;
    Expr::WeightedMode mode;
    DenseMatrix pinv;
    InnerProduct ip;
};
struct PsiLiftNode {
    LinearMap l;
    double gamma;
    Expr b;
    DenseMatrix psi_root;  // (Id - L L^*)^{1/2}
    LinearMap lifted;      // (x, y) -> Lx + psi_root y
};
struct ProductNode {
    std::vector<Expr> blocks;
};
struct ParallelComposeNode {
    LinearMap l;
    Expr b;
};
struct StandardComposeNode {
    LinearMap l;
    Expr b;
    double mu;  // L L^* = mu Id, or 0 when not a scaled coisometry
};

struct Node {
    using Variant = std::variant<LeafNode, InverseNode, ScaleLeftNode, ScaleRightNode, TranslateOutNode,
                                 TranslateInNode, AddScaledIdNode, YosidaNode, ComposeNode, CocomposeNode,
                                 MixtureNode, ComixtureNode, AverageNode, DouglasRachfordNode, ChainNode,
                                 WeightedComposeNode, PsiLiftNode, ProductNode, ParallelComposeNode,
                                 StandardComposeNode>;
    Variant v;
    std::size_t dim;
};

// block-bidiagonal map of the chain example on K^{p-1} -> K^p
LinearMap chain_map(std::size_t p, std::size_t k);

}  // namespace rcomp
