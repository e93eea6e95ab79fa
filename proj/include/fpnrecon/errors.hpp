#pragma once

#include <stdexcept>
#include <string>

namespace fpnrecon {

/// Base class for all library errors.
struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape or dimension mismatch between operands.
struct dimension_error : error {
    explicit dimension_error(const std::string& what) : error(what) {}
};

/// Invalid argument value (out-of-range parameter, zero normal, ...).
struct argument_error : error {
    explicit argument_error(const std::string& what) : error(what) {}
};

/// NaN or Inf encountered in an iterative scheme.
struct divergence_error : error {
    explicit divergence_error(const std::string& what) : error(what) {}
};

/// File I/O failure with a machine-inspectable kind.
struct io_error : error {
    enum class kind {
        open_failed,
        bad_magic,
        bad_header,
        truncated,
        nonfinite,
    };

    io_error(kind k, const std::string& what) : error(what), which(k) {}

    kind which;
};

} // namespace fpnrecon
