#pragma once

#include "agshield/core/error.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace agshield {

using StateIndex = std::uint64_t;
using ActionIndex = std::uint32_t;
/// Bit j set iff action j is in the set. Explicit strategies and shields need |Act| <= 64.
using ActionMask = std::uint64_t;

inline constexpr std::size_t kMaxMaskActions = 64;
/// Guard for every operation that enumerates a state space.
inline constexpr std::uint64_t kEnumerationLimit = 10'000'000;

[[nodiscard]] inline ActionMask action_bit(ActionIndex a) { return ActionMask{1} << a; }
[[nodiscard]] inline bool mask_has(ActionMask m, ActionIndex a) { return (m >> a) & 1U; }
[[nodiscard]] inline ActionMask full_mask(std::size_t count) {
    return count >= 64 ? ~ActionMask{0} : (ActionMask{1} << count) - 1;
}

/// One state variable: an integer range lo..hi with a step, or an enumerated label list.
class VarDomain {
public:
    enum class Kind { integer, enumerated };

    static VarDomain integer(std::string name, int lo, int hi, int step = 1) {
        if (step <= 0) throw InvalidArgument("domain '" + name + "': step must be positive");
        if (hi < lo) throw InvalidArgument("domain '" + name + "': empty range");
        if ((hi - lo) % step != 0) throw InvalidArgument("domain '" + name + "': (hi - lo) not divisible by step");
        VarDomain d;
        d.name_ = std::move(name);
        d.kind_ = Kind::integer;
        d.lo_ = lo;
        d.hi_ = hi;
        d.step_ = step;
        return d;
    }

    static VarDomain enumerated(std::string name, std::vector<std::string> labels) {
        if (labels.empty()) throw InvalidArgument("domain '" + name + "': no labels");
        VarDomain d;
        d.name_ = std::move(name);
        d.kind_ = Kind::enumerated;
        d.labels_ = std::move(labels);
        return d;
    }

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] int lo() const { return lo_; }
    [[nodiscard]] int hi() const { return hi_; }
    [[nodiscard]] int step() const { return step_; }
    [[nodiscard]] const std::vector<std::string>& labels() const { return labels_; }

    [[nodiscard]] std::size_t size() const {
        return kind_ == Kind::integer ? static_cast<std::size_t>((hi_ - lo_) / step_ + 1) : labels_.size();
    }

    /// Integer value of the index-th element (enumerated domains: the index itself).
    [[nodiscard]] int value(std::size_t index) const {
        return kind_ == Kind::integer ? lo_ + static_cast<int>(index) * step_ : static_cast<int>(index);
    }

    [[nodiscard]] std::optional<std::size_t> index_of(int value) const {
        if (kind_ == Kind::enumerated)
            return value >= 0 && static_cast<std::size_t>(value) < labels_.size()
                       ? std::optional<std::size_t>(static_cast<std::size_t>(value))
                       : std::nullopt;
        if (value < lo_ || value > hi_ || (value - lo_) % step_ != 0) return std::nullopt;
        return static_cast<std::size_t>((value - lo_) / step_);
    }

    friend bool operator==(const VarDomain&, const VarDomain&) = default;

    /// Equal up to the variable name.
    [[nodiscard]] bool same_values(const VarDomain& o) const {
        return kind_ == o.kind_ && lo_ == o.lo_ && hi_ == o.hi_ && step_ == o.step_ && labels_ == o.labels_;
    }

private:
    VarDomain() = default;

    std::string name_;
    Kind kind_ = Kind::integer;
    int lo_ = 0;
    int hi_ = 0;
    int step_ = 1;
    std::vector<std::string> labels_;
};

/// A point in a StateSpace: one value-index per dimension.
struct State {
    std::vector<std::size_t> coords;

    [[nodiscard]] std::size_t operator[](std::size_t i) const { return coords[i]; }
    friend bool operator==(const State&, const State&) = default;
};

/// Finite product of variable domains, indexed row-major with dimension 0 most significant.
class StateSpace {
public:
    StateSpace() = default;
    explicit StateSpace(std::vector<VarDomain> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw InvalidArgument("state space needs at least one dimension");
        strides_.assign(dims_.size(), 0);
        StateIndex acc = 1;
        indexable_ = true;
        for (std::size_t k = dims_.size(); k-- > 0;) {
            strides_[k] = indexable_ ? acc : 0;
            const StateIndex d = dims_[k].size();
            if (indexable_ && acc > std::numeric_limits<StateIndex>::max() / d) indexable_ = false;
            if (indexable_) acc *= d;
        }
        size_ = indexable_ ? static_cast<StateIndex>(acc) : 0;
    }

    [[nodiscard]] std::size_t dimensions() const { return dims_.size(); }
    [[nodiscard]] const std::vector<VarDomain>& dims() const { return dims_; }
    [[nodiscard]] const VarDomain& dim(std::size_t k) const { return dims_[k]; }

    /// False when the product overflows a 64-bit index (large generator-backed systems).
    [[nodiscard]] bool indexable() const { return indexable_; }

    [[nodiscard]] StateIndex size() const {
        if (!indexable_) throw TooLarge("state space", std::numeric_limits<StateIndex>::max(), std::numeric_limits<StateIndex>::max());
        return size_;
    }

    [[nodiscard]] StateIndex stride(std::size_t k) const { return strides_[k]; }

    [[nodiscard]] bool contains(const State& s) const {
        if (s.coords.size() != dims_.size()) return false;
        for (std::size_t k = 0; k < dims_.size(); ++k)
            if (s.coords[k] >= dims_[k].size()) return false;
        return true;
    }

    [[nodiscard]] StateIndex encode(const State& s) const { return encode(std::span<const std::size_t>(s.coords)); }

    [[nodiscard]] StateIndex encode(std::span<const std::size_t> coords) const {
        StateIndex idx = 0;
        for (std::size_t k = 0; k < dims_.size(); ++k) idx += coords[k] * strides_[k];
        return idx;
    }

    [[nodiscard]] State decode(StateIndex idx) const {
        State s;
        s.coords.resize(dims_.size());
        for (std::size_t k = 0; k < dims_.size(); ++k) s.coords[k] = coord(idx, k);
        return s;
    }

    [[nodiscard]] std::size_t coord(StateIndex idx, std::size_t k) const {
        return static_cast<std::size_t>((idx / strides_[k]) % dims_[k].size());
    }

    /// Integer value of dimension k at a state index.
    [[nodiscard]] int value(StateIndex idx, std::size_t k) const { return dims_[k].value(coord(idx, k)); }

    friend bool operator==(const StateSpace& a, const StateSpace& b) { return a.dims_ == b.dims_; }

    /// Same dimensions up to variable names, so indices mean the same valuations.
    [[nodiscard]] bool same_shape(const StateSpace& o) const {
        if (dims_.size() != o.dims_.size()) return false;
        for (std::size_t k = 0; k < dims_.size(); ++k)
            if (!dims_[k].same_values(o.dims_[k])) return false;
        return true;
    }

private:
    std::vector<VarDomain> dims_;
    std::vector<StateIndex> strides_;
    StateIndex size_ = 0;
    bool indexable_ = true;
};

/// Act = Act_1 x ... x Act_n. Joint actions are indexed row-major, agent 0 most significant.
class ActionSpace {
public:
    ActionSpace() = default;
    explicit ActionSpace(std::vector<std::vector<std::string>> agents) : agents_(std::move(agents)) {
        if (agents_.empty()) throw InvalidArgument("action space needs at least one agent");
        joint_ = 1;
        strides_.assign(agents_.size(), 0);
        for (std::size_t i = agents_.size(); i-- > 0;) {
            if (agents_[i].empty()) throw InvalidArgument("agent " + std::to_string(i + 1) + " has no actions");
            strides_[i] = joint_;
            joint_ *= agents_[i].size();
        }
    }

    /// Single-agent action space with the given labels.
    static ActionSpace single(std::vector<std::string> labels) { return ActionSpace({std::move(labels)}); }

    [[nodiscard]] std::size_t agent_count() const { return agents_.size(); }
    [[nodiscard]] std::size_t local_size(std::size_t agent) const { return agents_[agent].size(); }
    [[nodiscard]] const std::vector<std::string>& labels(std::size_t agent) const { return agents_[agent]; }
    [[nodiscard]] const std::vector<std::vector<std::string>>& agents() const { return agents_; }
    [[nodiscard]] std::size_t joint_size() const { return joint_; }

    [[nodiscard]] ActionIndex encode(std::span<const ActionIndex> local) const {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < agents_.size(); ++i) idx += local[i] * strides_[i];
        return static_cast<ActionIndex>(idx);
    }

    [[nodiscard]] std::vector<ActionIndex> decode(ActionIndex joint) const {
        std::vector<ActionIndex> out(agents_.size());
        for (std::size_t i = 0; i < agents_.size(); ++i) out[i] = component(joint, i);
        return out;
    }

    [[nodiscard]] ActionIndex component(ActionIndex joint, std::size_t agent) const {
        return static_cast<ActionIndex>((joint / strides_[agent]) % agents_[agent].size());
    }

    /// Action space with agent `agent` removed.
    [[nodiscard]] ActionSpace without(std::size_t agent) const {
        auto rest = agents_;
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(agent));
        return ActionSpace(std::move(rest));
    }

    /// Joint index of `reduced` (an action of without(agent)) with `local` inserted at position `agent`.
    [[nodiscard]] ActionIndex insert(ActionIndex reduced, std::size_t agent, ActionIndex local) const {
        const ActionSpace rest = without(agent);
        auto parts = rest.decode(reduced);
        parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(agent), local);
        return encode(parts);
    }

    friend bool operator==(const ActionSpace& a, const ActionSpace& b) { return a.agents_ == b.agents_; }

private:
    std::vector<std::vector<std::string>> agents_;
    std::vector<std::size_t> strides_;
    std::size_t joint_ = 0;
};

} // namespace agshield
