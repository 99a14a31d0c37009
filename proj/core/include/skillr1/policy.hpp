#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skillr1/rng.hpp"
#include "skillr1/types.hpp"

namespace skillr1
{
//---------------------------------------------------------------------------//
/*!
 * Dense row-major matrix used for the policy weights and their gradients.
 */
class Matrix
{
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c)
    {
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const
    {
        return data_[r * cols_ + c];
    }

    std::span<double> row(std::size_t r)
    {
        return {data_.data() + r * cols_, cols_};
    }
    std::span<double const> row(std::size_t r) const
    {
        return {data_.data() + r * cols_, cols_};
    }

    std::vector<double>& data() { return data_; }
    std::vector<double> const& data() const { return data_; }

    Matrix& operator+=(Matrix const& other);
    Matrix& operator*=(double scale);
    //! this += scale * other
    void add_scaled(Matrix const& other, double scale);

    bool all_finite() const;
    double max_abs() const;

    bool operator==(Matrix const&) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

//---------------------------------------------------------------------------//
// Action space
//
// Action 0 keeps the skill unchanged; action j in 1..d flips bit j-1
// (0-based from the left). action_count = d + 1.
//---------------------------------------------------------------------------//

constexpr int kNoOpAction = 0;

inline int flip_action(int bit) { return bit + 1; }
inline int action_count(int bit_count) { return bit_count + 1; }

//! Apply an edit action to a bit vector
Bits apply_action(Bits const& bits, int action);

//! Recover the action that maps \c parent to \c child (at most one flip)
int infer_action(Bits const& parent, Bits const& child);

//---------------------------------------------------------------------------//
/*!
 * Conditioning summary of the most recent generation record.
 *
 * Layout (feature_dim = 2d + 2):
 *   [0, d)      current skill bits
 *   d           mean reward of that generation
 *   [d+1, 2d+1) per-bit disagreement: fraction of rewarded rollouts whose
 *               bit differs from the skill (0 when nothing was rewarded)
 *   2d+1        bias, always 1
 */
struct HistoryFeatures
{
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    std::span<double const> view() const { return values; }
};

inline std::size_t feature_dim(int bit_count)
{
    return 2 * static_cast<std::size_t>(bit_count) + 2;
}

HistoryFeatures featurize(EvolutionHistory const& history);
HistoryFeatures featurize(GenerationRecord const& last);

//---------------------------------------------------------------------------//
//! Trainable weights of the linear-softmax skill generator
struct PolicyParams
{
    Matrix weights;  //!< action_count x feature_dim

    static PolicyParams zeros(int bit_count);
    //! Weights ~ N(0, scale^2) from a dedicated counter-based stream
    static PolicyParams random(int bit_count, double scale, std::uint64_t seed);

    int bit_count() const { return static_cast<int>(weights.rows()) - 1; }

    bool operator==(PolicyParams const&) const = default;
};

//! FNV-1a hash of shape and raw weight bytes
std::uint64_t params_hash(PolicyParams const& params);

void save_params(PolicyParams const& params, std::ostream& os);
PolicyParams load_params(std::istream& is);
void save_params(PolicyParams const& params, std::string const& path);
PolicyParams load_params(std::string const& path);

enum class SnapshotRole
{
    behavior,
    reference
};

//! Immutable, shareable copy of the policy parameters
class PolicySnapshot
{
  public:
    PolicySnapshot(PolicyParams params, SnapshotRole role);

    PolicyParams const& params() const { return *params_; }
    SnapshotRole role() const { return role_; }
    std::uint64_t hash() const { return hash_; }

  private:
    std::shared_ptr<PolicyParams const> params_;
    SnapshotRole role_;
    std::uint64_t hash_;
};

//---------------------------------------------------------------------------//
// Distribution, sampling, gradients
//---------------------------------------------------------------------------//

std::vector<double> logits(Matrix const& weights, std::span<double const> feats);

//! Numerically stable log-softmax of W * feats
std::vector<double> log_action_distribution(Matrix const& weights,
                                            std::span<double const> feats);

std::vector<double> action_distribution(Matrix const& weights,
                                        std::span<double const> feats);
std::vector<double> action_distribution(PolicyParams const& params,
                                        HistoryFeatures const& feats);

double action_logprob(Matrix const& weights,
                      std::span<double const> feats,
                      int action);

//! Draw an action by inverse CDF from one uniform variate
int sample_action(std::span<double const> probs, double u);

struct SampledSkill
{
    Skill skill;
    int action = 0;
    double logprob = 0;
};

//! Draw an edit from pi(.|feats) and apply it to \c current
SampledSkill sample_skill(PolicyParams const& params,
                          HistoryFeatures const& feats,
                          Skill const& current,
                          Philox& rng);

//! Gradient of log pi(action | feats) wrt the weights: (onehot - pi) x feats
Matrix logprob_grad(Matrix const& weights,
                    std::span<double const> feats,
                    int action);

//! Exact KL(p || q) over the discrete action space
double kl_divergence(Matrix const& p_weights,
                     Matrix const& q_weights,
                     std::span<double const> feats);
double kl_divergence(PolicyParams const& p,
                     PolicyParams const& q,
                     HistoryFeatures const& feats);

//! Gradient of KL(p_theta || q) wrt p's weights, q held fixed
Matrix kl_grad(Matrix const& p_weights,
               Matrix const& q_weights,
               std::span<double const> feats);

}  // namespace skillr1
