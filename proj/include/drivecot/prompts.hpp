#pragma once

#include <string>

namespace drivecot::prompts {

// Compiled-in copies of the templates under prompts/; configs may point at
// edited files instead. Placeholders: {cameras}, {history}, {command},
// {velocity}, {acceleration} for the annotator; {cot} for the logic check.
const std::string& annotator_template();
const std::string& logic_check_template();

// System lines for the two roles.
const std::string& annotator_system();
const std::string& logic_check_system();

std::string load_template_file(const std::string& path);

}  // namespace drivecot::prompts
