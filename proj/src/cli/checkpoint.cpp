#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aftvo/checkpoint.hpp"
#include "aftvo/io.hpp"

namespace aftvo::cli {
namespace {

constexpr const char* kMagic = "AFTVO-CKPT";

void write_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(bytes, 8);
}

double read_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw io::FormatError("checkpoint data truncated");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  return std::bit_cast<double>(bits);
}

std::string read_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw io::FormatError("checkpoint header truncated");
  return line;
}

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::set<std::string> names;
  for (const auto& a : ckpt.arrays) {
    if (!names.insert(a.name).second) throw std::invalid_argument("duplicate checkpoint array " + a.name);
    if (a.name.find_first_of(" \n") != std::string::npos) throw std::invalid_argument("bad array name " + a.name);
    if (a.values.size() != a.rows * a.cols) throw std::invalid_argument("array size mismatch for " + a.name);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // write to a sibling file first so an interrupted save keeps the last good checkpoint
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw io::IoError("cannot write " + tmp.string());
    out << kMagic << ' ' << kCheckpointVersion << '\n';
    out << "step " << ckpt.step << '\n';
    out << "config " << ckpt.config.dump() << '\n';
    out << "meta " << ckpt.meta.dump() << '\n';
    out << "arrays " << ckpt.arrays.size() << '\n';
    for (const auto& a : ckpt.arrays) out << a.name << ' ' << a.rows << ' ' << a.cols << '\n';
    out << "data\n";
    for (const auto& a : ckpt.arrays)
      for (double v : a.values) write_le(out, v);
    if (!out) throw io::IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::IoError("cannot read " + path.string());
  Checkpoint ckpt;
  {
    std::istringstream magic(read_line(in));
    std::string m;
    int version = 0;
    magic >> m >> version;
    if (m != kMagic) throw io::FormatError(path.string() + " is not a checkpoint");
    if (version != kCheckpointVersion) throw io::FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  auto field = [&](const std::string& key) {
    std::string line = read_line(in);
    if (line.rfind(key + " ", 0) != 0) throw io::FormatError("checkpoint header lacks '" + key + "'");
    return line.substr(key.size() + 1);
  };
  try {
    ckpt.step = std::stoull(field("step"));
    ckpt.config = nlohmann::json::parse(field("config"));
    ckpt.meta = nlohmann::json::parse(field("meta"));
  } catch (const nlohmann::json::exception& e) {
    throw io::FormatError(std::string("checkpoint header: ") + e.what());
  }
  const std::size_t count = std::stoull(field("arrays"));
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream ls(read_line(in));
    NamedArray a;
    if (!(ls >> a.name >> a.rows >> a.cols)) throw io::FormatError("malformed checkpoint array entry");
    ckpt.arrays.push_back(std::move(a));
  }
  if (read_line(in) != "data") throw io::FormatError("checkpoint header lacks data marker");
  for (auto& a : ckpt.arrays) {
    a.values.resize(a.rows * a.cols);
    for (auto& v : a.values) v = read_le(in);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw io::FormatError("trailing bytes after checkpoint data");
  return ckpt;
}

void append_store(Checkpoint& ckpt, const num::ParameterStore& store) {
  for (const auto& e : store.entries()) {
    const auto d = e.tensor.data();
    ckpt.arrays.push_back({e.name, e.tensor.rows(), e.tensor.cols(), {d.begin(), d.end()}});
  }
}

void restore_store(const Checkpoint& ckpt, num::ParameterStore& store) {
  for (auto& e : store.entries()) {
    const NamedArray* a = ckpt.find(e.name);
    if (!a) throw io::FormatError("checkpoint lacks parameter " + e.name);
    if (a->rows != e.tensor.rows() || a->cols != e.tensor.cols())
      throw io::FormatError("shape mismatch for parameter " + e.name);
    auto dst = e.tensor.mutable_data();
    std::copy(a->values.begin(), a->values.end(), dst.begin());
  }
}

void append_optimiser(Checkpoint& ckpt, const std::string& prefix, const num::Adam& adam) {
  ckpt.meta["optim"][prefix]["steps"] = adam.steps();
  for (const auto& [name, m] : adam.first_moments())
    ckpt.arrays.push_back({"optim/" + prefix + "/m/" + name, 1, m.size(), m});
  for (const auto& [name, v] : adam.second_moments())
    ckpt.arrays.push_back({"optim/" + prefix + "/v/" + name, 1, v.size(), v});
}

void restore_optimiser(const Checkpoint& ckpt, const std::string& prefix, num::Adam& adam) {
  const auto& meta = ckpt.meta;
  if (!meta.contains("optim") || !meta["optim"].contains(prefix))
    throw io::FormatError("checkpoint lacks optimiser state " + prefix);
  adam.set_steps(meta["optim"][prefix]["steps"].get<std::uint64_t>());
  adam.first_moments().clear();
  adam.second_moments().clear();
  const std::string m_key = "optim/" + prefix + "/m/", v_key = "optim/" + prefix + "/v/";
  for (const auto& a : ckpt.arrays) {
    if (a.name.rfind(m_key, 0) == 0) adam.first_moments()[a.name.substr(m_key.size())] = a.values;
    else if (a.name.rfind(v_key, 0) == 0) adam.second_moments()[a.name.substr(v_key.size())] = a.values;
  }
}

}  // namespace aftvo::cli
