#include "codedfl/fl/model.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace codedfl::fl {

namespace {

using Index = Eigen::Index;

struct Views {
    Eigen::Map<const RowMatrix> w1;
    Eigen::Map<const Eigen::VectorXd> b1;
    Eigen::Map<const RowMatrix> w2;
    Eigen::Map<const Eigen::VectorXd> b2;
};

Views views(const Vector& theta, Index in, Index hid, Index cls) {
    const double* p = theta.data();
    return Views{Eigen::Map<const RowMatrix>(p, hid, in), Eigen::Map<const Eigen::VectorXd>(p + hid * in, hid),
                 Eigen::Map<const RowMatrix>(p + hid * in + hid, cls, hid),
                 Eigen::Map<const Eigen::VectorXd>(p + hid * in + hid + cls * hid, cls)};
}

// Row-wise log-softmax.
RowMatrix log_softmax(const RowMatrix& z) {
    RowMatrix out(z.rows(), z.cols());
    for (Index i = 0; i < z.rows(); ++i) {
        const double mx = z.row(i).maxCoeff();
        const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
        out.row(i) = z.row(i).array() - lse;
    }
    return out;
}

}  // namespace

Mlp::Mlp(std::size_t inputs, std::size_t hidden, std::size_t classes)
    : inputs_(inputs), hidden_(hidden), classes_(classes) {
    if (inputs == 0 || hidden == 0 || classes < 2) {
        throw std::invalid_argument(fmt::format("invalid MLP shape {}-{}-{}", inputs, hidden, classes));
    }
}

std::size_t Mlp::dim() const { return hidden_ * inputs_ + hidden_ + classes_ * hidden_ + classes_; }

Vector Mlp::initialize(Rng& rng) const {
    Vector theta = Vector::Zero(static_cast<Index>(dim()));
    const double s1 = std::sqrt(6.0 / static_cast<double>(inputs_ + hidden_));
    const double s2 = std::sqrt(6.0 / static_cast<double>(hidden_ + classes_));
    const auto n1 = static_cast<Index>(hidden_ * inputs_);
    const auto off2 = n1 + static_cast<Index>(hidden_);
    const auto n2 = static_cast<Index>(classes_ * hidden_);
    for (Index i = 0; i < n1; ++i) {
        theta[i] = s1 * (2.0 * rng.uniform() - 1.0);
    }
    for (Index i = 0; i < n2; ++i) {
        theta[off2 + i] = s2 * (2.0 * rng.uniform() - 1.0);
    }
    return theta;
}

RowMatrix Mlp::logits(const Vector& theta, const RowMatrix& x) const {
    const auto v = views(theta, static_cast<Index>(inputs_), static_cast<Index>(hidden_), static_cast<Index>(classes_));
    RowMatrix h = ((x * v.w1.transpose()).rowwise() + v.b1.transpose()).cwiseMax(0.0);
    return (h * v.w2.transpose()).rowwise() + v.b2.transpose();
}

double Mlp::loss_and_gradient(const Vector& theta, const Dataset& data, std::span<const std::size_t> batch,
                              Vector& grad) const {
    const auto in = static_cast<Index>(inputs_);
    const auto hid = static_cast<Index>(hidden_);
    const auto cls = static_cast<Index>(classes_);
    if (static_cast<std::size_t>(theta.size()) != dim() || data.features() != inputs_) {
        throw std::invalid_argument("MLP parameters or data do not match the architecture");
    }
    const auto n = static_cast<Index>(batch.size());
    RowMatrix x(n, in);
    for (Index i = 0; i < n; ++i) {
        x.row(i) = data.x.row(static_cast<Index>(batch[static_cast<std::size_t>(i)]));
    }
    const auto v = views(theta, in, hid, cls);
    const RowMatrix pre = (x * v.w1.transpose()).rowwise() + v.b1.transpose();
    const RowMatrix h = pre.cwiseMax(0.0);
    const RowMatrix z = (h * v.w2.transpose()).rowwise() + v.b2.transpose();
    const RowMatrix logp = log_softmax(z);

    double loss = 0.0;
    RowMatrix dz = logp.array().exp();
    for (Index i = 0; i < n; ++i) {
        const int label = data.y[batch[static_cast<std::size_t>(i)]];
        loss -= logp(i, label);
        dz(i, label) -= 1.0;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss *= inv_n;
    dz *= inv_n;

    grad.resize(theta.size());
    double* g = grad.data();
    Eigen::Map<RowMatrix> gw1(g, hid, in);
    Eigen::Map<Eigen::VectorXd> gb1(g + hid * in, hid);
    Eigen::Map<RowMatrix> gw2(g + hid * in + hid, cls, hid);
    Eigen::Map<Eigen::VectorXd> gb2(g + hid * in + hid + cls * hid, cls);

    gw2.noalias() = dz.transpose() * h;
    gb2 = dz.colwise().sum().transpose();
    RowMatrix dh = dz * v.w2;
    dh.array() *= (pre.array() > 0.0).cast<double>();
    gw1.noalias() = dh.transpose() * x;
    gb1 = dh.colwise().sum().transpose();
    return loss;
}

Evaluation Mlp::evaluate(const Vector& theta, const Dataset& data) const {
    if (data.size() == 0) {
        throw std::invalid_argument("evaluate: empty dataset");
    }
    const RowMatrix logp = log_softmax(logits(theta, data.x));
    Evaluation ev;
    std::size_t correct = 0;
    for (Index i = 0; i < logp.rows(); ++i) {
        Index best = 0;
        logp.row(i).maxCoeff(&best);
        const int label = data.y[static_cast<std::size_t>(i)];
        if (best == label) {
            ++correct;
        }
        ev.loss -= logp(i, label);
    }
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    ev.loss /= static_cast<double>(data.size());
    return ev;
}

}  // namespace codedfl::fl
