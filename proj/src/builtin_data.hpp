#pragma once

#include <string_view>

namespace pqpan::builtin {

// Contents of data/*.csv, embedded at configure time.
std::string_view schemes_csv();
std::string_view reference_energy_csv();
std::string_view cycles_csv();

}  // namespace pqpan::builtin
