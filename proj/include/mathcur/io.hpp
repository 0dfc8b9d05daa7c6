#ifndef MATHCUR_IO_HPP_
#define MATHCUR_IO_HPP_

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace mathcur {

using Json = nlohmann::ordered_json;

/// Writes to a sibling temp file; commit() renames it over the target.
/// Destroying an uncommitted writer removes the temp file, so a failed run
/// never leaves partial output behind.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(std::filesystem::path target);
  ~AtomicFileWriter();

  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

  std::ostream& stream() { return out_; }
  void write_line(std::string_view line);
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path temp_;
  std::ofstream out_;
  bool committed_ = false;
};

/// Calls fn(line_number, line) for each line, 1-based. Throws InputError if
/// the file cannot be opened.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, std::string_view)>& fn);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value);

/// Single-line dump used for every JSON Lines output (UTF-8 kept verbatim).
std::string dump_line(const Json& value);

}  // namespace mathcur

#endif  // MATHCUR_IO_HPP_
