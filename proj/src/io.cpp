#include "mathcur/io.hpp"

#include <atomic>
#include <system_error>

#include "mathcur/common.hpp"

namespace mathcur {

namespace {
std::atomic<unsigned> g_temp_counter{0};
}

AtomicFileWriter::AtomicFileWriter(std::filesystem::path target) : target_(std::move(target)) {
  if (target_.has_parent_path() && !target_.parent_path().empty()) {
    std::error_code ec;
    std::filesystem::create_directories(target_.parent_path(), ec);
  }
  temp_ = target_;
  temp_ += ".tmp" + std::to_string(g_temp_counter.fetch_add(1));
  out_.open(temp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw InputError("cannot open output file: " + target_.string());
}

AtomicFileWriter::~AtomicFileWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(temp_, ec);
  }
}

void AtomicFileWriter::write_line(std::string_view line) {
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.put('\n');
}

void AtomicFileWriter::commit() {
  out_.flush();
  if (!out_) throw InputError("write failed: " + target_.string());
  out_.close();
  std::filesystem::rename(temp_, target_);
  committed_ = true;
}

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, std::string_view)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file: " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fn(number, line);
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file: " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& value) {
  AtomicFileWriter writer(path);
  writer.stream() << value.dump(2, ' ', false) << '\n';
  writer.commit();
}

std::string dump_line(const Json& value) { return value.dump(-1, ' ', false); }

}  // namespace mathcur
