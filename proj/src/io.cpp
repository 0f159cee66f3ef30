#include "gatebench/io.hpp"

#include <fstream>
#include <sstream>

#include "gatebench/error.hpp"

namespace gatebench {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("unreadable_file", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("unwritable_file", path.string());
  out << content;
  if (!out) throw Error("unwritable_file", path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

Json read_json_file(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& ex) {
    throw Error("malformed_file", path.string() + ": " + ex.what());
  }
}

}  // namespace gatebench
