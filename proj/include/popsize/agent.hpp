#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace popsize {

enum class Role : std::uint8_t { X, A, S, F };

const char* role_name(Role r);

enum class Variant : std::uint8_t {
    as_randomized,  // A/S split, agents draw geometric variables from their own coins
    af_synthetic,   // A/F split, coin flips come from the scheduler's receiver/sender choice
};

const char* variant_name(Variant v);

class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidState : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct ProtocolParams {
    Variant variant = Variant::as_randomized;
    std::uint32_t cte = 140;               // epoch length is cte * clk interactions
    std::uint32_t epoch_multiplier = 5;    // K = epoch_multiplier * clk epochs
    std::uint32_t clk_offset = 2;          // added to the clk geometric draw

    void validate() const
    {
        if (cte < 1)
            throw InvalidParameter("cte must be >= 1");
        if (epoch_multiplier < 1)
            throw InvalidParameter("epoch_multiplier must be >= 1");
    }

    static ProtocolParams faithful(Variant v = Variant::as_randomized)
    {
        ProtocolParams p;
        p.variant = v;
        p.cte = v == Variant::as_randomized ? 140 : 200;
        return p;
    }

    static ProtocolParams fast(Variant v = Variant::as_randomized)
    {
        ProtocolParams p;
        p.variant = v;
        p.cte = 16;
        return p;
    }

    friend bool operator==(const ProtocolParams&, const ProtocolParams&) = default;
};

/// Exact sum/epochs + 1, kept as a fraction (sum + epochs) / epochs.
struct Rational {
    std::uint32_t num = 0;
    std::uint32_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::int64_t rounded() const { return std::llround(value()); }

    friend bool operator==(const Rational& a, const Rational& b)
    {
        return static_cast<std::uint64_t>(a.num) * b.den == static_cast<std::uint64_t>(b.num) * a.den;
    }
};

/// Full memory of one agent. A/S agents use updated_sum; A/F agents use the
/// two generation flags. Fields not used by a role keep their initial values.
struct AgentState {
    Role role = Role::X;
    bool updated_sum = false;
    bool log_size_generated = false;
    bool gr_generated = false;
    bool protocol_done = false;
    std::uint32_t clk = 1;
    std::uint32_t gr = 1;
    std::uint32_t time = 0;
    std::uint32_t epoch = 0;
    std::uint32_t sum = 0;
    std::optional<Rational> output;

    bool operator==(const AgentState& o) const
    {
        return role == o.role && updated_sum == o.updated_sum && log_size_generated == o.log_size_generated &&
               gr_generated == o.gr_generated && protocol_done == o.protocol_done && clk == o.clk && gr == o.gr &&
               time == o.time && epoch == o.epoch && sum == o.sum && output.has_value() == o.output.has_value() &&
               (!output || (output->num == o.output->num && output->den == o.output->den));
    }
};

std::string describe(const AgentState& a);

} // namespace popsize
