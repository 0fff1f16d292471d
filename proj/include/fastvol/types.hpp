#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "fastvol/error.hpp"

namespace fastvol {

/// Call/put indicator; theta() is +1 for calls and -1 for puts.
class OptionFlag {
public:
    static constexpr OptionFlag call() noexcept { return OptionFlag(1); }
    static constexpr OptionFlag put() noexcept { return OptionFlag(-1); }

    /// Accepts exactly "c", "C", "p" or "P".
    static OptionFlag parse(std::string_view token) {
        if (token.size() == 1) {
            switch (token.front()) {
            case 'c': case 'C': return call();
            case 'p': case 'P': return put();
            default: break;
            }
        }
        throw DomainError("option flag must be 'c' or 'p', got '" + std::string(token) + "'");
    }

    constexpr int theta() const noexcept { return theta_; }
    constexpr double sign() const noexcept { return static_cast<double>(theta_); }
    constexpr bool is_call() const noexcept { return theta_ > 0; }
    constexpr char to_char() const noexcept { return theta_ > 0 ? 'c' : 'p'; }

    constexpr OptionFlag opposite() const noexcept { return OptionFlag(-theta_); }

    friend constexpr bool operator==(OptionFlag, OptionFlag) = default;

private:
    constexpr explicit OptionFlag(int theta) noexcept : theta_(theta) {}
    int theta_;
};

enum class Model {
    Black76,            // underlying is the forward F
    BlackScholes,       // underlying is spot S, no dividend yield
    BlackScholesMerton, // underlying is spot S, continuous dividend yield q
};

inline std::string_view to_string(Model model) {
    switch (model) {
    case Model::Black76: return "black";
    case Model::BlackScholes: return "bs";
    case Model::BlackScholesMerton: return "bsm";
    }
    return "unknown";
}

/// Parses the short model names used on the command line ("black", "bs", "bsm").
inline Model parse_model(std::string_view name) {
    if (name == "black" || name == "black76") return Model::Black76;
    if (name == "bs" || name == "black_scholes") return Model::BlackScholes;
    if (name == "bsm" || name == "black_scholes_merton") return Model::BlackScholesMerton;
    throw DomainError("unknown model '" + std::string(name) + "'");
}

/// One European contract. `underlying` is F for Black76 and S otherwise;
/// `q` is ignored unless the model is BlackScholesMerton.
struct PricingInputs {
    Model model = Model::BlackScholes;
    double underlying = 0.0;
    double strike = 0.0;
    double t = 0.0;
    double r = 0.0;
    double q = 0.0;
    double sigma = 0.0;

    double dividend_yield() const noexcept { return model == Model::BlackScholesMerton ? q : 0.0; }

    double forward() const noexcept {
        if (model == Model::Black76) return underlying;
        return underlying * std::exp((r - dividend_yield()) * t);
    }

    double discount() const noexcept { return std::exp(-r * t); }
};

} // namespace fastvol
