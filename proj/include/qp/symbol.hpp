#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace qp {

// Process-wide symbol interning. Ids are dense and stable for the lifetime
// of the process; comparisons on ids replace string comparisons everywhere.
int32_t intern(std::string_view name);
const std::string& symbol_name(int32_t sym);

namespace builtins {
int32_t eq();    // =   (unification)
int32_t neq();   // \=  (ground disequality)
int32_t lt();    // <
int32_t le();    // =<
bool is_builtin(int32_t sym);
}  // namespace builtins

}  // namespace qp
