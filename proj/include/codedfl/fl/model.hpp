#pragma once

#include <cstddef>
#include <span>

#include "codedfl/fl/dataset.hpp"
#include "codedfl/random.hpp"

namespace codedfl::fl {

/// Differentiable empirical loss over a batch of samples.
class Objective {
public:
    virtual ~Objective() = default;

    virtual std::size_t dim() const = 0;

    /// Mean loss over `batch` (indices into `data`); writes its gradient into `grad`.
    virtual double loss_and_gradient(const Vector& theta, const Dataset& data, std::span<const std::size_t> batch,
                                     Vector& grad) const = 0;
};

struct Evaluation {
    double accuracy = 0.0;
    double loss = 0.0;  ///< mean cross-entropy
};

/**
 * inputs -> hidden (ReLU) -> classes, softmax cross-entropy.
 *
 * Parameter layout: W1 (hidden x inputs, row-major), b1, W2 (classes x
 * hidden, row-major), b2.
 */
class Mlp : public Objective {
public:
    Mlp(std::size_t inputs, std::size_t hidden, std::size_t classes);

    std::size_t inputs() const { return inputs_; }
    std::size_t hidden() const { return hidden_; }
    std::size_t classes() const { return classes_; }
    std::size_t dim() const override;

    /// Glorot-uniform weights, zero biases.
    Vector initialize(Rng& rng) const;

    double loss_and_gradient(const Vector& theta, const Dataset& data, std::span<const std::size_t> batch,
                             Vector& grad) const override;

    /// Row i holds the class scores of sample i.
    RowMatrix logits(const Vector& theta, const RowMatrix& x) const;

    Evaluation evaluate(const Vector& theta, const Dataset& data) const;

private:
    std::size_t inputs_;
    std::size_t hidden_;
    std::size_t classes_;
};

}  // namespace codedfl::fl
