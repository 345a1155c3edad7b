#pragma once

#include <span>
#include <string>
#include <string_view>

#include "metasdt/trial_store.hpp"

namespace metasdt {

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

// Digest of the canonical serialisation of a trial collection, in order.
std::string trials_digest(std::span<const TrialRecord> trials);

}  // namespace metasdt
