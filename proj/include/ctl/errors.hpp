#pragma once

#include <stdexcept>
#include <string>

namespace ctl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LabelError : Error { using Error::Error; };
struct SupportError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct InvalidChannelError : Error { using Error::Error; };
struct RankError : Error { using Error::Error; };
struct RegimeError : Error { using Error::Error; };
struct UnsupportedOrderError : Error { using Error::Error; };
struct BudgetError : Error { using Error::Error; };
struct ArgumentError : Error { using Error::Error; };

}  // namespace ctl
