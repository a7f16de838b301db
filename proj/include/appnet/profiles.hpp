#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "appnet/simulator.hpp"

namespace appnet {

/// Named profiles and perturbations available to the simulator and the harness.
struct ProfileLibrary {
    std::map<std::string, AppProfile> profiles;
    std::map<std::string, PerturbationSpec> perturbations;

    const AppProfile& profile(const std::string& name) const;
    const PerturbationSpec& perturbation(const std::string& name) const;
};

/// Ten illustrative benign app profiles, each with a `<name>_v2` version
/// update, a `<name>_v2_minor` update with no network-relevant change, and a
/// `<name>_trojan` beacon injection.
const ProfileLibrary& builtin_library();

/// Names of the benign presets, in a fixed order.
const std::vector<std::string>& builtin_profile_names();

/// Reads a YAML document with optional `profiles:` and `perturbations:` maps and
/// merges it over `base`. Profiles may name a preset in `base:` to inherit from.
/// Throws DataError carrying the line of the offending entry.
ProfileLibrary load_library(std::istream& in, const ProfileLibrary& base = builtin_library());
ProfileLibrary load_library_file(const std::filesystem::path& path, const ProfileLibrary& base = builtin_library());

}  // namespace appnet
