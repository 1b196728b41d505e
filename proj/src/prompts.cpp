#include "drivecot/prompts.hpp"

#include <fstream>
#include <sstream>

#include "drivecot/errors.hpp"

namespace drivecot::prompts {

namespace {

const char* kAnnotatorTemplate =
    R"(You are annotating driving scenes for an autonomous-driving planner.
You are given the current surround-view camera images, recent front-view
frames as a short history video, the high-level driving command, and the
ego vehicle status.

Surround-view images: {cameras}
History frames: {history}
Driving command: {command}
Ego status: velocity {velocity} m/s, acceleration {acceleration} m/s^2

Reason about the scene and decide how the ego vehicle should act over the
next 3 seconds. Write your reasoning with exactly these four sections:

Scene Analysis:
Describe the scene and the motion tendency of every critical object, using
the history frames to judge how each object is moving.

Latent Risk Assessment:
Describe the risks implied by those motion tendencies.

Behavior Reasoning:
Explain how the ego vehicle should behave and why.

Action Decision:
Direction: one of [Maintain Current Lane, Change Lane Left, Change Lane Right, Turn Left, Turn Right]
Speed: one of [Smooth Deceleration, Emergency Brake, Maintain Current Speed, Smooth Acceleration, Stop, Remain Stationary]
)";

const char* kLogicCheckTemplate =
    R"(Review the driving chain-of-thought below for logical soundness. The
behavior reasoning and action decision must follow from the scene analysis
and the latent risk assessment, with no broken causal chains, contradictions,
or conclusions disconnected from the described scenario.

Chain-of-thought:
{cot}

Reply on the first line with exactly one of:
PASS
FAIL: <one-line summary of the logic errors>
Do not write anything before the verdict line.
)";

const char* kAnnotatorSystem =
    "You are a precise autonomous-driving scene annotator. Follow the "
    "requested output format exactly.";

const char* kLogicCheckSystem =
    "You are a strict logical reviewer of driving reasoning. Answer with the "
    "requested verdict format only.";

}  // namespace

const std::string& annotator_template() {
  static const std::string tmpl = kAnnotatorTemplate;
  return tmpl;
}

const std::string& logic_check_template() {
  static const std::string tmpl = kLogicCheckTemplate;
  return tmpl;
}

const std::string& annotator_system() {
  static const std::string text = kAnnotatorSystem;
  return text;
}

const std::string& logic_check_system() {
  static const std::string text = kLogicCheckSystem;
  return text;
}

std::string load_template_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open template file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace drivecot::prompts
