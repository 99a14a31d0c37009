#include "skillr1/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace skillr1
{
//---------------------------------------------------------------------------//
// Matrix
//---------------------------------------------------------------------------//

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
{
}

Matrix& Matrix::operator+=(Matrix const& other)
{
    add_scaled(other, 1.0);
    return *this;
}

Matrix& Matrix::operator*=(double scale)
{
    for (double& v : data_)
    {
        v *= scale;
    }
    return *this;
}

void Matrix::add_scaled(Matrix const& other, double scale)
{
    if (other.rows_ != rows_ || other.cols_ != cols_)
    {
        throw PreconditionError("matrix shape mismatch");
    }
    for (std::size_t i = 0; i < data_.size(); ++i)
    {
        data_[i] += scale * other.data_[i];
    }
}

bool Matrix::all_finite() const
{
    return std::all_of(
        data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Matrix::max_abs() const
{
    double m = 0;
    for (double v : data_)
    {
        m = std::max(m, std::abs(v));
    }
    return m;
}

//---------------------------------------------------------------------------//
// Actions
//---------------------------------------------------------------------------//

Bits apply_action(Bits const& bits, int action)
{
    if (action < 0 || action > static_cast<int>(bits.size()))
    {
        throw PreconditionError("action " + std::to_string(action)
                                + " out of range for "
                                + std::to_string(bits.size()) + " bits");
    }
    Bits out = bits;
    if (action != kNoOpAction)
    {
        auto& b = out[static_cast<std::size_t>(action - 1)];
        b = static_cast<std::uint8_t>(1 - b);
    }
    return out;
}

int infer_action(Bits const& parent, Bits const& child)
{
    if (parent.size() != child.size())
    {
        throw PreconditionError("infer_action: length mismatch");
    }
    int action = kNoOpAction;
    for (std::size_t j = 0; j < parent.size(); ++j)
    {
        if (parent[j] != child[j])
        {
            if (action != kNoOpAction)
            {
                throw PreconditionError(
                    "infer_action: skills differ in more than one bit");
            }
            action = flip_action(static_cast<int>(j));
        }
    }
    return action;
}

//---------------------------------------------------------------------------//
// Features
//---------------------------------------------------------------------------//

HistoryFeatures featurize(GenerationRecord const& last)
{
    if (!last.skill.vector)
    {
        throw PreconditionError("featurize: skill " + last.skill.id
                                + " has no feature vector");
    }
    auto const& skill = *last.skill.vector;
    auto const d = skill.size();

    HistoryFeatures f;
    f.values.assign(feature_dim(static_cast<int>(d)), 0.0);
    for (std::size_t j = 0; j < d; ++j)
    {
        f.values[j] = skill[j];
    }
    f.values[d] = last.mean_reward;

    std::vector<int> differ(d, 0);
    int rewarded = 0;
    for (auto const& r : last.rollouts)
    {
        if (r.reward <= 0)
        {
            continue;
        }
        auto const* bits = std::get_if<Bits>(&r.content);
        if (!bits || bits->size() != d)
        {
            throw PreconditionError("featurize: rollout content is not a "
                                    + std::to_string(d) + "-bit vector");
        }
        ++rewarded;
        for (std::size_t j = 0; j < d; ++j)
        {
            differ[j] += ((*bits)[j] != skill[j]);
        }
    }
    if (rewarded > 0)
    {
        for (std::size_t j = 0; j < d; ++j)
        {
            f.values[d + 1 + j] = static_cast<double>(differ[j]) / rewarded;
        }
    }
    f.values[2 * d + 1] = 1.0;
    return f;
}

HistoryFeatures featurize(EvolutionHistory const& history)
{
    if (history.empty())
    {
        throw PreconditionError("featurize: empty history");
    }
    return featurize(history.back());
}

//---------------------------------------------------------------------------//
// Parameters
//---------------------------------------------------------------------------//

PolicyParams PolicyParams::zeros(int bit_count)
{
    return {Matrix(static_cast<std::size_t>(action_count(bit_count)),
                   feature_dim(bit_count))};
}

PolicyParams PolicyParams::random(int bit_count, double scale, std::uint64_t seed)
{
    auto p = zeros(bit_count);
    Philox rng(derive_seed(
        {static_cast<std::uint64_t>(StreamPurpose::init_params), seed}));
    for (double& w : p.weights.data())
    {
        w = scale * rng.normal();
    }
    return p;
}

std::uint64_t params_hash(PolicyParams const& params)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&h](void const* data, std::size_t n) {
        auto const* bytes = static_cast<unsigned char const*>(data);
        for (std::size_t i = 0; i < n; ++i)
        {
            h ^= bytes[i];
            h *= 0x100000001b3ull;
        }
    };
    std::uint64_t shape[2] = {params.weights.rows(), params.weights.cols()};
    feed(shape, sizeof(shape));
    auto const& d = params.weights.data();
    feed(d.data(), d.size() * sizeof(double));
    return h;
}

void save_params(PolicyParams const& params, std::ostream& os)
{
    auto const& w = params.weights;
    os << "skillr1-params 1\n" << w.rows() << ' ' << w.cols() << '\n';
    os << std::setprecision(17);
    for (std::size_t r = 0; r < w.rows(); ++r)
    {
        for (std::size_t c = 0; c < w.cols(); ++c)
        {
            os << (c ? " " : "") << w(r, c);
        }
        os << '\n';
    }
}

PolicyParams load_params(std::istream& is)
{
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "skillr1-params" || version != 1)
    {
        throw FormatError("parameter file: missing 'skillr1-params 1' header");
    }
    std::size_t rows = 0, cols = 0;
    if (!(is >> rows >> cols) || rows < 2 || cols != 2 * (rows - 1) + 2)
    {
        throw FormatError("parameter file: bad shape header");
    }
    PolicyParams p{Matrix(rows, cols)};
    for (double& v : p.weights.data())
    {
        if (!(is >> v) || !std::isfinite(v))
        {
            throw FormatError("parameter file: expected "
                              + std::to_string(rows * cols)
                              + " finite values");
        }
    }
    return p;
}

void save_params(PolicyParams const& params, std::string const& path)
{
    std::ofstream os(path);
    if (!os)
    {
        throw FormatError("cannot write " + path);
    }
    save_params(params, os);
}

PolicyParams load_params(std::string const& path)
{
    std::ifstream is(path);
    if (!is)
    {
        throw FormatError("cannot read parameter file " + path);
    }
    return load_params(is);
}

PolicySnapshot::PolicySnapshot(PolicyParams params, SnapshotRole role)
    : params_(std::make_shared<PolicyParams const>(std::move(params)))
    , role_(role)
    , hash_(params_hash(*params_))
{
}

//---------------------------------------------------------------------------//
// Distribution
//---------------------------------------------------------------------------//

std::vector<double> logits(Matrix const& weights, std::span<double const> feats)
{
    if (feats.size() != weights.cols())
    {
        throw PreconditionError("feature length " + std::to_string(feats.size())
                                + " != weight columns "
                                + std::to_string(weights.cols()));
    }
    std::vector<double> z(weights.rows(), 0.0);
    for (std::size_t a = 0; a < weights.rows(); ++a)
    {
        auto row = weights.row(a);
        double acc = 0;
        for (std::size_t k = 0; k < feats.size(); ++k)
        {
            acc += row[k] * feats[k];
        }
        z[a] = acc;
    }
    return z;
}

std::vector<double> log_action_distribution(Matrix const& weights,
                                            std::span<double const> feats)
{
    auto z = logits(weights, feats);
    double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (double v : z)
    {
        sum += std::exp(v - zmax);
    }
    double log_norm = zmax + std::log(sum);
    for (double& v : z)
    {
        v -= log_norm;
    }
    return z;
}

std::vector<double> action_distribution(Matrix const& weights,
                                        std::span<double const> feats)
{
    auto z = logits(weights, feats);
    double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (double& v : z)
    {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z)
    {
        v /= sum;
    }
    return z;
}

std::vector<double> action_distribution(PolicyParams const& params,
                                        HistoryFeatures const& feats)
{
    return action_distribution(params.weights, feats.view());
}

double action_logprob(Matrix const& weights,
                      std::span<double const> feats,
                      int action)
{
    auto lp = log_action_distribution(weights, feats);
    if (action < 0 || action >= static_cast<int>(lp.size()))
    {
        throw PreconditionError("action out of range");
    }
    return lp[static_cast<std::size_t>(action)];
}

int sample_action(std::span<double const> probs, double u)
{
    double cdf = 0;
    for (std::size_t a = 0; a < probs.size(); ++a)
    {
        cdf += probs[a];
        if (u < cdf)
        {
            return static_cast<int>(a);
        }
    }
    // u landed in the rounding gap above the accumulated total
    for (std::size_t a = probs.size(); a-- > 0;)
    {
        if (probs[a] > 0)
        {
            return static_cast<int>(a);
        }
    }
    return 0;
}

SampledSkill sample_skill(PolicyParams const& params,
                          HistoryFeatures const& feats,
                          Skill const& current,
                          Philox& rng)
{
    if (!current.vector)
    {
        throw PreconditionError("sample_skill: skill has no vector");
    }
    if (static_cast<int>(current.vector->size()) != params.bit_count())
    {
        throw PreconditionError("sample_skill: skill length does not match "
                                "policy action space");
    }
    auto logp = log_action_distribution(params.weights, feats.view());
    std::vector<double> probs(logp.size());
    std::transform(logp.begin(), logp.end(), probs.begin(), [](double v) {
        return std::exp(v);
    });
    int action = sample_action(probs, rng.uniform());

    SampledSkill out;
    out.skill = current.make_child();
    out.skill.vector = apply_action(*current.vector, action);
    out.action = action;
    out.logprob = logp[static_cast<std::size_t>(action)];
    return out;
}

Matrix logprob_grad(Matrix const& weights,
                    std::span<double const> feats,
                    int action)
{
    auto probs = action_distribution(weights, feats);
    if (action < 0 || action >= static_cast<int>(probs.size()))
    {
        throw PreconditionError("action out of range");
    }
    Matrix g(weights.rows(), weights.cols());
    for (std::size_t a = 0; a < weights.rows(); ++a)
    {
        double coeff = (static_cast<int>(a) == action ? 1.0 : 0.0) - probs[a];
        auto row = g.row(a);
        for (std::size_t k = 0; k < feats.size(); ++k)
        {
            row[k] = coeff * feats[k];
        }
    }
    return g;
}

double kl_divergence(Matrix const& p_weights,
                     Matrix const& q_weights,
                     std::span<double const> feats)
{
    auto lp = log_action_distribution(p_weights, feats);
    auto lq = log_action_distribution(q_weights, feats);
    if (lp.size() != lq.size())
    {
        throw PreconditionError("kl_divergence: action spaces differ");
    }
    double kl = 0;
    for (std::size_t a = 0; a < lp.size(); ++a)
    {
        kl += std::exp(lp[a]) * (lp[a] - lq[a]);
    }
    return std::max(kl, 0.0);
}

double kl_divergence(PolicyParams const& p,
                     PolicyParams const& q,
                     HistoryFeatures const& feats)
{
    return kl_divergence(p.weights, q.weights, feats.view());
}

Matrix kl_grad(Matrix const& p_weights,
               Matrix const& q_weights,
               std::span<double const> feats)
{
    auto lp = log_action_distribution(p_weights, feats);
    auto lq = log_action_distribution(q_weights, feats);
    double kl = 0;
    for (std::size_t a = 0; a < lp.size(); ++a)
    {
        kl += std::exp(lp[a]) * (lp[a] - lq[a]);
    }
    // dKL/dz_a = p_a (log p_a - log q_a - KL)
    Matrix g(p_weights.rows(), p_weights.cols());
    for (std::size_t a = 0; a < lp.size(); ++a)
    {
        double coeff = std::exp(lp[a]) * (lp[a] - lq[a] - kl);
        auto row = g.row(a);
        for (std::size_t k = 0; k < feats.size(); ++k)
        {
            row[k] = coeff * feats[k];
        }
    }
    return g;
}

}  // namespace skillr1
