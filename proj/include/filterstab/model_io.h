#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "filterstab/finite_pomp.h"

namespace filterstab {

// Model file schema:
//   {"n": int, "m": int, "K": int, "T": [[..]], "Q": [..], "H": [[..]]}
// with an optional "B" that must agree with the channel derived from (Q, H)
// within 1e-12. Throws ValidationError with the offending field named.
FinitePomp ModelFromJson(const nlohmann::json& doc);
nlohmann::json ModelToJson(const FinitePomp& model);
FinitePomp LoadModel(const std::filesystem::path& path);

// Finite prior spec: "uniform", a comma separated list "0.7,0.1,0.1,0.1",
// a JSON array, or {"point": i}.
FiniteDist ParseFinitePrior(const nlohmann::json& spec, int num_states);

nlohmann::json ReadJsonFile(const std::filesystem::path& path);
std::string ReadTextFile(const std::filesystem::path& path);

// The 4-state model with Y = 1{x <= 2} whose joint two-step matrix is full
// rank while its marginal matrix is rank 3.
FinitePomp FourStateExample();

}  // namespace filterstab
