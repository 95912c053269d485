#include "wordspot/experiment/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "wordspot/error.hpp"
#include "wordspot/hash.hpp"

namespace wordspot::experiment {
namespace {

constexpr char kMagic[8] = {'W', 'S', 'P', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kMaxString = 1u << 26;
constexpr std::uint32_t kMaxRank = 8;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { bytes(v, 4); }
  void u64(std::uint64_t v) { bytes(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void array(const std::string& name, const diff::Array& a) {
    str(name);
    u32(static_cast<std::uint32_t>(a.rank()));
    for (const auto e : a.shape()) u64(e);
    for (const double v : a.values()) f64(v);
  }

 private:
  void bytes(std::uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf, n);
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    if (n > kMaxString) fail("string length out of range");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  std::pair<std::string, diff::Array> array() {
    std::string name = str();
    const auto rank = u32();
    if (rank == 0 || rank > kMaxRank) fail("array '" + name + "' has invalid rank");
    diff::Shape shape(rank);
    std::uint64_t count = 1;
    for (auto& e : shape) {
      e = static_cast<std::size_t>(u64());
      if (e == 0 || count > (std::uint64_t{1} << 40) / e) {
        fail("array '" + name + "' has invalid extents");
      }
      count *= e;
    }
    diff::Storage data(static_cast<std::size_t>(count));
    for (auto& v : data) v = f64();
    return {std::move(name), diff::Array(std::move(shape), std::move(data))};
  }
  void raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated checkpoint");
  }
  [[noreturn]] static void fail(const std::string& message) {
    throw Error(ErrorCode::kBadCheckpoint, message);
  }

 private:
  std::uint64_t bytes(int n) {
    unsigned char buf[8];
    raw(reinterpret_cast<char*>(buf), static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
};

std::uint64_t descriptor_hash(const std::string& descriptor) {
  return Fnv1a{}.update(descriptor).digest();
}

}  // namespace

Checkpoint make_checkpoint(const arch::LayerGraph& graph,
                           arch::ParameterSet parameters,
                           diff::AdamState optimizer, std::uint64_t iteration) {
  Checkpoint c;
  c.arch_descriptor = graph.descriptor();
  c.arch_hash = descriptor_hash(c.arch_descriptor);
  c.iteration = iteration;
  c.parameters = std::move(parameters);
  c.optimizer = std::move(optimizer);
  return c;
}

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  Writer w(out);
  out.write(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u64(c.arch_hash);
  w.u64(c.iteration);
  w.str(c.arch_descriptor);
  w.u32(static_cast<std::uint32_t>(c.metadata.size()));
  for (const auto& [k, v] : c.metadata) {
    w.str(k);
    w.str(v);
  }
  const auto& opt = c.optimizer;
  w.f64(opt.beta1);
  w.f64(opt.beta2);
  w.f64(opt.epsilon);
  w.f64(opt.learning_rate);
  w.u64(opt.step_count);

  const auto& p = c.parameters;
  const bool has_moments = !opt.first_moment.empty();
  if (has_moments && (opt.first_moment.size() != p.size() ||
                      opt.second_moment.size() != p.size())) {
    throw Error(ErrorCode::kShapeMismatch, "optimizer state does not match parameters");
  }
  w.u32(static_cast<std::uint32_t>(p.size() * (has_moments ? 3 : 1)));
  for (std::size_t i = 0; i < p.size(); ++i) w.array(p.names[i], p.values[i]);
  if (has_moments) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      w.array("adam.m/" + p.names[i], opt.first_moment[i]);
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      w.array("adam.v/" + p.names[i], opt.second_moment[i]);
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[sizeof kMagic];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) Reader::fail("not a checkpoint file");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    Reader::fail("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.arch_hash = r.u64();
  c.iteration = r.u64();
  c.arch_descriptor = r.str();
  if (descriptor_hash(c.arch_descriptor) != c.arch_hash) {
    Reader::fail("architecture hash does not match the stored descriptor");
  }
  const auto meta = r.u32();
  for (std::uint32_t i = 0; i < meta; ++i) {
    auto key = r.str();
    c.metadata[std::move(key)] = r.str();
  }
  auto& opt = c.optimizer;
  opt.beta1 = r.f64();
  opt.beta2 = r.f64();
  opt.epsilon = r.f64();
  opt.learning_rate = r.f64();
  opt.step_count = r.u64();

  const auto count = r.u32();
  std::vector<std::pair<std::string, diff::Array>> arrays;
  for (std::uint32_t i = 0; i < count; ++i) arrays.push_back(r.array());
  std::size_t n = 0;
  while (n < arrays.size() && !arrays[n].first.starts_with("adam.")) ++n;
  if (n != arrays.size() && arrays.size() != 3 * n) {
    Reader::fail("optimizer moments do not match the parameter list");
  }
  for (std::size_t i = 0; i < n; ++i) {
    c.parameters.names.push_back(arrays[i].first);
    c.parameters.values.push_back(std::move(arrays[i].second));
  }
  if (arrays.size() == 3 * n && n > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (arrays[n + i].first != "adam.m/" + c.parameters.names[i] ||
          arrays[2 * n + i].first != "adam.v/" + c.parameters.names[i]) {
        Reader::fail("optimizer moment names out of order");
      }
      opt.first_moment.push_back(std::move(arrays[n + i].second));
      opt.second_moment.push_back(std::move(arrays[2 * n + i].second));
    }
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    write_checkpoint(out, c);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void require_compatible(const Checkpoint& c, const arch::LayerGraph& graph) {
  const auto expected = graph.descriptor();
  if (c.arch_hash != descriptor_hash(expected) || c.arch_descriptor != expected) {
    throw Error(ErrorCode::kArchMismatch,
                "checkpoint was written for a different architecture than '" +
                    graph.name() + "'");
  }
  const auto shapes = arch::parameter_shapes(graph);
  if (shapes.size() != c.parameters.size()) {
    throw Error(ErrorCode::kArchMismatch, "checkpoint parameter count differs");
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (c.parameters.values[i].shape() != shapes[i]) {
      throw Error(ErrorCode::kArchMismatch,
                  "parameter '" + c.parameters.names[i] + "' has shape " +
                      diff::shape_string(c.parameters.values[i].shape()) +
                      ", expected " + diff::shape_string(shapes[i]));
    }
  }
}

}  // namespace wordspot::experiment
