#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace powtopo::cli {

struct TheoryArgs {
    //! single | two | three | two-equal | oracle | optimum
    std::string kind;
    //! Model for oracle / optimum: single | two | three | two-equal.
    std::string model{"two"};
    double p{0.7};
    double p1{1.0 / 3}, p2{1.0 / 3}, p3{1.0 / 3};
    double p_each{0.4};
    std::size_t n{20};
    double eps{0.3};
    double delta{1.5};
    std::optional<double> from, to;
    double step{0.005};
    std::uint32_t rounds{1000000};
    std::uint32_t tail{100};
    std::uint64_t seed{1};
    std::size_t runs{1};
    std::string csv_path;
};

/**
 * Evaluate formulas or the round oracle and print a table to `out`; also writes the table as
 * CSV when csv_path is set.
 * @throws DomainError / ConfigError for bad parameters.
 */
void theory_command(const TheoryArgs& args, std::ostream& out);

} // namespace powtopo::cli
