#pragma once

#include <set>
#include <string>
#include <vector>

#include "irvo/model.hpp"

namespace irvo {

enum class StyleLabel { WIMP, VR, AR, AV, MR };

const char* to_string(StyleLabel label);

// One tool acting on one object, read off a salient action chain from a
// user. The four Tr/Tv x Or/Ov cases, plus mixed-group membership flags.
struct CaseInstance {
  std::string tool;
  std::string object;
  World tool_world = World::Real;
  World object_world = World::Real;
  bool tool_mixed = false;
  bool object_mixed = false;

  bool operator==(const CaseInstance&) const = default;
  auto operator<=>(const CaseInstance&) const = default;
};

// "TrOr", "TrOv", "TvOr" or "TvOv".
std::string case_name(const CaseInstance& c);

std::vector<CaseInstance> interaction_cases(const Model& m);

// Identifiers of conventional pointing/typing/display devices. A device
// matches when its id, or any _-/- separated token of it, is listed.
struct DeviceProfile {
  std::set<std::string> ids;

  bool matches(const std::string& id) const;
  static DeviceProfile standard();  // mouse, keyboard, screen
};

// One identifier per line; '#' starts a comment; blank lines ignored.
DeviceProfile profile_from_text(std::string_view text);

StyleLabel classify(const Model& m, const DeviceProfile& profile = DeviceProfile::standard());

}  // namespace irvo
