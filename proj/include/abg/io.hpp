#pragma once

#include "abg/builder.hpp"

#include <json.hpp>

#include <string>

namespace abg {

inline constexpr const char* kGameSchema = "absorbing-game/v1";
inline constexpr const char* kReportSchema = "absorbing-report/v1";
inline constexpr const char* kToolVersion = "1.0.0";

using Json = nlohmann::ordered_json;

// Parses a game document. Probabilities and payoffs may be JSON numbers,
// decimal strings or exact fractions "n/d". Throws ValidationError whose
// violations carry line:column or field paths.
GameSpec parse_game_text(const std::string& text);
GameSpec parse_game_file(const std::string& path);
std::string read_file(const std::string& path);

// Canonical form: fixed key order, one matrix row per line, shortest
// round-trip decimals.
std::string serialize_game(const GameSpec& g);

std::string sha256_hex(const std::string& bytes);
std::string format_number(double x);

Json to_json(const MixedAction& x, const std::vector<std::string>& labels);
Json to_json(const MinmaxReport& mm, const GameSpec& g);
Json to_json(const Check& c);
Json to_json(const CaseReport& rep, const GameSpec& g);
Json to_json(const PipelineResult& pr, const GameSpec& g);
Json to_json(const StrategyMachine& m, const GameSpec& g);
Json to_json(const EquilibriumProfile& prof, const GameSpec& g);
Json to_json(const EvaluationResult& ev);
Json to_json(const EquilibriumCertificate& cert, const GameSpec& g);
Json to_json(const PunisherCertificate& cert, const GameSpec& g);
Json to_json(const SimulationReport& sim);

// Envelope shared by every command.
Json report_header(const std::string& command, const std::string& input_path, const std::string& input_bytes,
                   const GameSpec& g);

}  // namespace abg
