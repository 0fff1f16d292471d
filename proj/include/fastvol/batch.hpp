#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "fastvol/error.hpp"
#include "fastvol/greeks.hpp"
#include "fastvol/iv_halley.hpp"
#include "fastvol/iv_lbr.hpp"
#include "fastvol/pricing.hpp"
#include "fastvol/solver_result.hpp"
#include "fastvol/types.hpp"

namespace fastvol {

enum class IvMethod { Halley, Lbr };

inline std::string_view to_string(IvMethod method) { return method == IvMethod::Halley ? "halley" : "lbr"; }

inline IvMethod parse_method(std::string_view name) {
    if (name == "halley") return IvMethod::Halley;
    if (name == "lbr") return IvMethod::Lbr;
    throw DomainError("unknown method '" + std::string(name) + "'");
}

/// Column names shared by the library and the CSV schema.
namespace columns {
inline constexpr std::string_view flag = "flag";
inline constexpr std::string_view spot = "S";
inline constexpr std::string_view forward = "F";
inline constexpr std::string_view strike = "K";
inline constexpr std::string_view t = "t";
inline constexpr std::string_view r = "r";
inline constexpr std::string_view q = "q";
inline constexpr std::string_view sigma = "sigma";
inline constexpr std::string_view price = "price";
inline constexpr std::string_view iv = "iv";
inline constexpr std::string_view status = "status";
inline constexpr std::string_view delta = "delta";
inline constexpr std::string_view gamma = "gamma";
inline constexpr std::string_view theta = "theta";
inline constexpr std::string_view rho = "rho";
inline constexpr std::string_view vega = "vega";
} // namespace columns

/// Name of the underlying column for a model: "F" under Black76, "S" otherwise.
inline std::string_view underlying_column(Model model) {
    return model == Model::Black76 ? columns::forward : columns::spot;
}

/// N from a list of column lengths; every length must be 1 or N.
inline std::size_t broadcast(std::span<const std::size_t> lengths) {
    std::size_t n = 0;
    bool any_non_scalar = false;
    for (std::size_t len : lengths) {
        if (len != 1) {
            if (any_non_scalar && len != n) {
                throw BatchError(BatchErrorKind::ShapeMismatch, 0,
                                 "column lengths " + std::to_string(n) + " and " + std::to_string(len) +
                                     " cannot be broadcast");
            }
            n = len;
            any_non_scalar = true;
        }
    }
    if (!any_non_scalar && !lengths.empty()) n = 1;
    return n;
}

inline std::size_t broadcast(std::initializer_list<std::size_t> lengths) {
    return broadcast(std::span<const std::size_t>(lengths.begin(), lengths.size()));
}

/// Flags from per-row tokens; an unknown token raises BadFlag with its row.
inline std::vector<OptionFlag> parse_flags(std::span<const std::string> tokens) {
    std::vector<OptionFlag> flags;
    flags.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        try {
            flags.push_back(OptionFlag::parse(tokens[i]));
        } catch (const DomainError&) {
            throw BatchError(BatchErrorKind::BadFlag, i, "unrecognised option flag '" + tokens[i] + "'");
        }
    }
    return flags;
}

/// A single flag token, broadcast as a length-1 column.
inline std::vector<OptionFlag> parse_flags(std::string_view token) {
    const std::string owned(token);
    return parse_flags(std::span<const std::string>(&owned, 1));
}

/// One byte per row ('c', 'C', 'p' or 'P'), as exchanged with foreign callers.
inline std::vector<OptionFlag> parse_flag_bytes(std::span<const std::uint8_t> bytes) {
    std::vector<OptionFlag> flags;
    flags.reserve(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        switch (bytes[i]) {
        case 'c': case 'C': flags.push_back(OptionFlag::call()); break;
        case 'p': case 'P': flags.push_back(OptionFlag::put()); break;
        default:
            throw BatchError(BatchErrorKind::BadFlag, i,
                             "unrecognised option flag byte " + std::to_string(static_cast<int>(bytes[i])));
        }
    }
    return flags;
}

/// Named columns of length 1 (broadcast) or N, in insertion order.
class ChainTable {
public:
    using Data = std::variant<std::vector<double>, std::vector<OptionFlag>, std::vector<SolverStatus>>;

    struct Column {
        std::string name;
        Data data;

        std::size_t size() const {
            return std::visit([](const auto& v) { return v.size(); }, data);
        }
    };

    ChainTable() = default;

    ChainTable& set(std::string_view name, std::vector<double> values) { return put(name, std::move(values)); }
    ChainTable& set(std::string_view name, double scalar) { return put(name, std::vector<double>{scalar}); }
    ChainTable& set_flags(std::vector<OptionFlag> flags) { return put(columns::flag, std::move(flags)); }
    ChainTable& set_flags(std::string_view token) { return put(columns::flag, parse_flags(token)); }
    ChainTable& set_flags(std::span<const std::string> tokens) { return put(columns::flag, parse_flags(tokens)); }
    ChainTable& set_status(std::string_view name, std::vector<SolverStatus> values) {
        return put(name, std::move(values));
    }

    bool has(std::string_view name) const { return find(name) != nullptr; }

    void erase(std::string_view name) {
        std::erase_if(columns_, [&](const Column& c) { return c.name == name; });
    }

    const Column* find(std::string_view name) const {
        for (const Column& c : columns_) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }

    const std::vector<double>& numbers(std::string_view name) const { return get<std::vector<double>>(name); }
    const std::vector<OptionFlag>& flags() const { return get<std::vector<OptionFlag>>(columns::flag); }
    const std::vector<SolverStatus>& statuses(std::string_view name) const {
        return get<std::vector<SolverStatus>>(name);
    }

    const std::vector<Column>& all() const { return columns_; }

    /// Broadcast row count; throws ShapeMismatch for incompatible columns.
    std::size_t rows() const {
        std::vector<std::size_t> lengths;
        lengths.reserve(columns_.size());
        for (const Column& c : columns_) lengths.push_back(c.size());
        try {
            return broadcast(lengths);
        } catch (const BatchError&) {
            throw BatchError(BatchErrorKind::ShapeMismatch, 0, describe_shapes());
        }
    }

private:
    template <class T>
    ChainTable& put(std::string_view name, std::vector<T> values) {
        for (Column& c : columns_) {
            if (c.name == name) {
                c.data = std::move(values);
                return *this;
            }
        }
        columns_.push_back(Column{std::string(name), Data(std::move(values))});
        return *this;
    }

    template <class T>
    const T& get(std::string_view name) const {
        const Column* c = find(name);
        if (c == nullptr) throw DomainError("missing column '" + std::string(name) + "'");
        const T* values = std::get_if<T>(&c->data);
        if (values == nullptr) throw DomainError("column '" + std::string(name) + "' has the wrong type");
        return *values;
    }

    std::string describe_shapes() const {
        std::string text = "column lengths cannot be broadcast:";
        for (const Column& c : columns_) text += " " + c.name + "=" + std::to_string(c.size());
        return text;
    }

    std::vector<Column> columns_;
};

/// Read-only view of a numeric column with scalar broadcasting.
class ColumnView {
public:
    ColumnView() = default;
    explicit ColumnView(const std::vector<double>& values) : data_(values.data()), size_(values.size()) {}
    static ColumnView constant(const double& value) {
        ColumnView view;
        view.data_ = &value;
        view.size_ = 1;
        return view;
    }
    double operator[](std::size_t i) const { return size_ == 1 ? data_[0] : data_[i]; }
    std::size_t size() const { return size_; }

private:
    const double* data_ = nullptr;
    std::size_t size_ = 0;
};

struct BatchOptions {
    /// Explicit worker count; otherwise FASTVOL_THREADS, then hardware concurrency.
    std::optional<unsigned> workers;
    GreekScaling scaling{};
    HalleyControls halley{};
    LbrControls lbr{};
};

/// Worker count: the explicit request, else FASTVOL_THREADS, else the
/// available hardware parallelism. Always at least 1.
inline unsigned resolve_workers(std::optional<unsigned> requested = std::nullopt) {
    if (requested && *requested > 0) return *requested;
    if (const char* env = std::getenv("FASTVOL_THREADS")) {
        char* end = nullptr;
        const long value = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && value > 0) return static_cast<unsigned>(value);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Rows per contiguous chunk: max(1024, N / (4 W)).
inline std::size_t chunk_size(std::size_t rows, unsigned workers) {
    return std::max<std::size_t>(1024, rows / (4 * static_cast<std::size_t>(workers)));
}

/// Runs body(begin, end) over contiguous chunks of [0, rows) on up to
/// `workers` threads. The first exception thrown by any chunk is rethrown.
template <class Body>
void parallel_chunks(std::size_t rows, unsigned workers, Body&& body) {
    if (rows == 0) return;
    const std::size_t chunk = chunk_size(rows, workers);
    const std::size_t chunks = (rows + chunk - 1) / chunk;
    const std::size_t threads = std::min<std::size_t>(workers, chunks);
    if (threads <= 1) {
        body(std::size_t{0}, rows);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::atomic_flag error_taken = ATOMIC_FLAG_INIT;
    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t index = next.fetch_add(1, std::memory_order_relaxed);
            if (index >= chunks) return;
            const std::size_t begin = index * chunk;
            try {
                body(begin, std::min(rows, begin + chunk));
            } catch (...) {
                if (!error_taken.test_and_set()) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (std::thread& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

namespace detail {

enum class Needs { Price, Iv, Greeks };

struct ContractColumns {
    Model model;
    std::size_t rows = 0;
    const std::vector<OptionFlag>* flags = nullptr;
    ColumnView underlying;
    ColumnView strike;
    ColumnView t;
    ColumnView r;
    ColumnView q;
    ColumnView sigma;
    ColumnView price;

    OptionFlag flag(std::size_t i) const { return flags->size() == 1 ? (*flags)[0] : (*flags)[i]; }

    PricingInputs inputs(std::size_t i, bool with_sigma) const {
        return PricingInputs{
            .model = model,
            .underlying = underlying[i],
            .strike = strike[i],
            .t = t[i],
            .r = r[i],
            .q = q[i],
            .sigma = with_sigma ? sigma[i] : 0.0,
        };
    }
};

inline constexpr double kZero = 0.0;

inline const std::vector<double>& required_numbers(const ChainTable& table, std::string_view name) {
    if (!table.has(name)) {
        throw BatchError(BatchErrorKind::MissingColumn, 0, "missing required column '" + std::string(name) + "'");
    }
    return table.numbers(name);
}

// First row at which `bad` holds, or npos.
template <class Pred>
std::size_t first_bad_row(ColumnView view, std::size_t rows, Pred bad) {
    const std::size_t n = view.size() == 1 ? std::min<std::size_t>(rows, 1) : rows;
    for (std::size_t i = 0; i < n; ++i) {
        if (bad(view[i])) return i;
    }
    return std::string::npos;
}

struct Violation {
    std::size_t row = std::string::npos;
    BatchErrorKind kind = BatchErrorKind::NonFiniteInput;
    std::string detail;

    void consider(std::size_t candidate, BatchErrorKind k, std::string text) {
        if (candidate < row) {
            row = candidate;
            kind = k;
            detail = std::move(text);
        }
    }
};

inline void check_column(Violation& v, ColumnView view, std::size_t rows, std::string_view name,
                         bool positive, bool non_negative) {
    const std::string column(name);
    v.consider(first_bad_row(view, rows, [](double x) { return !std::isfinite(x); }),
               BatchErrorKind::NonFiniteInput, "column '" + column + "' is not finite");
    if (positive) {
        v.consider(first_bad_row(view, rows, [](double x) { return x <= 0.0; }), BatchErrorKind::OutOfDomain,
                   "column '" + column + "' must be positive");
    }
    if (non_negative) {
        v.consider(first_bad_row(view, rows, [](double x) { return x < 0.0; }), BatchErrorKind::OutOfDomain,
                   "column '" + column + "' must be non-negative");
    }
}

inline ContractColumns bind_columns(Model model, const ChainTable& table, Needs needs) {
    ContractColumns c{};
    c.model = model;
    c.rows = table.rows();
    if (!table.has(columns::flag)) {
        throw BatchError(BatchErrorKind::MissingColumn, 0, "missing required column 'flag'");
    }
    c.flags = &table.flags();
    c.underlying = ColumnView(required_numbers(table, underlying_column(model)));
    c.strike = ColumnView(required_numbers(table, columns::strike));
    c.t = ColumnView(required_numbers(table, columns::t));
    c.r = ColumnView(required_numbers(table, columns::r));
    c.q = table.has(columns::q) ? ColumnView(table.numbers(columns::q)) : ColumnView::constant(kZero);
    if (needs == Needs::Iv) c.price = ColumnView(required_numbers(table, columns::price));
    else c.sigma = ColumnView(required_numbers(table, columns::sigma));
    return c;
}

} // namespace detail

/// Checks that every cell the computation reads is finite and in domain
/// (underlying, K > 0; t, sigma >= 0). Throws for the first offending row.
inline void validate(const detail::ContractColumns& c, bool needs_price) {
    detail::Violation v;
    detail::check_column(v, c.underlying, c.rows, c.model == Model::Black76 ? "F" : "S", true, false);
    detail::check_column(v, c.strike, c.rows, "K", true, false);
    detail::check_column(v, c.t, c.rows, "t", false, true);
    detail::check_column(v, c.r, c.rows, "r", false, false);
    if (c.q.size() > 0) detail::check_column(v, c.q, c.rows, "q", false, false);
    if (needs_price) detail::check_column(v, c.price, c.rows, "price", false, false);
    else detail::check_column(v, c.sigma, c.rows, "sigma", false, true);
    if (v.row != std::string::npos) throw BatchError(v.kind, v.row, v.detail);
}

/// Validates the columns a given computation needs.
inline void validate(Model model, const ChainTable& table, bool for_iv = false) {
    validate(detail::bind_columns(model, table, for_iv ? detail::Needs::Iv : detail::Needs::Price), for_iv);
}

/// Adds a "price" column.
inline ChainTable batch_price(Model model, const ChainTable& table, const BatchOptions& options = {}) {
    const detail::ContractColumns c = detail::bind_columns(model, table, detail::Needs::Price);
    validate(c, false);
    std::vector<double> out(c.rows);
    parallel_chunks(c.rows, resolve_workers(options.workers), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = price(c.flag(i), c.inputs(i, true));
    });
    ChainTable result = table;
    result.set(columns::price, std::move(out));
    return result;
}

/// Adds "iv" and "status" columns. Rows whose solve fails carry NaN.
inline ChainTable batch_iv(Model model, IvMethod method, const ChainTable& table, const BatchOptions& options = {}) {
    const detail::ContractColumns c = detail::bind_columns(model, table, detail::Needs::Iv);
    validate(c, true);
    std::vector<double> iv(c.rows);
    std::vector<SolverStatus> status(c.rows);
    parallel_chunks(c.rows, resolve_workers(options.workers), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const PricingInputs in = c.inputs(i, false);
            const SolverResult solved = method == IvMethod::Halley
                                            ? implied_vol_halley(c.price[i], c.flag(i), in, options.halley)
                                            : implied_vol_lbr(c.price[i], c.flag(i), in, options.lbr);
            iv[i] = solved.ok() ? solved.sigma : std::numeric_limits<double>::quiet_NaN();
            status[i] = solved.status;
        }
    });
    ChainTable result = table;
    result.set(columns::iv, std::move(iv));
    result.set_status(columns::status, std::move(status));
    return result;
}

/// Adds the five Greek columns. Rows at zero total volatility carry NaN.
inline ChainTable batch_greeks(Model model, const ChainTable& table, const BatchOptions& options = {}) {
    const detail::ContractColumns c = detail::bind_columns(model, table, detail::Needs::Greeks);
    validate(c, false);
    std::vector<double> delta_out(c.rows), gamma_out(c.rows), theta_out(c.rows), rho_out(c.rows),
        vega_out(c.rows);
    parallel_chunks(c.rows, resolve_workers(options.workers), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            GreeksRecord g;
            try {
                g = all_greeks(c.flag(i), c.inputs(i, true), options.scaling);
            } catch (const StepFunctionEdge&) {
                constexpr double nan = std::numeric_limits<double>::quiet_NaN();
                g = GreeksRecord{nan, nan, nan, nan, nan};
            }
            delta_out[i] = g.delta;
            gamma_out[i] = g.gamma;
            theta_out[i] = g.theta;
            rho_out[i] = g.rho;
            vega_out[i] = g.vega;
        }
    });
    ChainTable result = table;
    result.set(columns::delta, std::move(delta_out));
    result.set(columns::gamma, std::move(gamma_out));
    result.set(columns::theta, std::move(theta_out));
    result.set(columns::rho, std::move(rho_out));
    result.set(columns::vega, std::move(vega_out));
    return result;
}

} // namespace fastvol
