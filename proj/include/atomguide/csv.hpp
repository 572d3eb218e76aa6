#pragma once

#include <concepts>
#include <ostream>
#include <string>
#include <string_view>

namespace atomguide {

/// Shortest decimal representation that parses back to the same double.
std::string format_number(double value);

class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    template <typename... Fields>
    void row(const Fields&... fields) {
        bool first = true;
        ((emit(fields, first)), ...);
        os_ << '\n';
    }

  private:
    void separator(bool& first) {
        if (!first) os_ << ',';
        first = false;
    }
    void emit(double v, bool& first) {
        separator(first);
        os_ << format_number(v);
    }
    template <std::integral I>
    void emit(I v, bool& first) {
        separator(first);
        os_ << v;
    }
    void emit(std::string_view v, bool& first) {
        separator(first);
        os_ << v;
    }
    void emit(const char* v, bool& first) { emit(std::string_view(v), first); }
    void emit(const std::string& v, bool& first) { emit(std::string_view(v), first); }

    std::ostream& os_;
};

}  // namespace atomguide
