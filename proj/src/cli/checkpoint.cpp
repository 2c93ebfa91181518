#include "wscf/cli/checkpoint.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace wscf::cli {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'W', 'S', 'C', 'F', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw CheckpointError("sha256 init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) {
    if (n && EVP_DigestUpdate(ctx_, data, n) != 1) throw CheckpointError("sha256 update failed");
  }
  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, digest, &len) != 1) throw CheckpointError("sha256 final failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
  }

 private:
  EVP_MD_CTX* ctx_;
};

json header_without_hash(const Checkpoint& c) {
  json h;
  h["format"] = "wscf-checkpoint";
  h["version"] = Checkpoint::kVersion;
  h["stage"] = c.stage;
  h["completed_stages"] = c.completed_stages;
  h["config"] = c.config;
  h["optimizer"] = c.optimizer;
  json list = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : c.tensors) {
    list.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}, {"count", t.size()}});
    offset += t.size() * sizeof(float);
  }
  h["tensors"] = list;
  return h;
}

std::string digest(const std::string& header, const Checkpoint& c) {
  Sha256 sha;
  sha.update(header.data(), header.size());
  for (const auto& [name, t] : c.tensors) sha.update(t.values().data(), t.size() * sizeof(float));
  return sha.hex();
}

template <typename V>
void write_le(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename V>
V read_le(std::istream& is, const std::string& what) {
  V v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw CheckpointError("truncated checkpoint: " + what);
  return v;
}

const char* kGroups[] = {"svcc", "homography", "fusion"};

}  // namespace

const Tensor<float>& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw CheckpointError("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  return std::any_of(tensors.begin(), tensors.end(), [&](const auto& p) { return p.first == name; });
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  json h = header_without_hash(c);
  h["sha256"] = digest(h.dump(), c);
  const std::string header = h.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_le<std::uint32_t>(out, Checkpoint::kVersion);
  write_le<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, t] : c.tensors) {
    out.write(reinterpret_cast<const char*>(t.values().data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw CheckpointError(path.string() + ": not a checkpoint (bad magic)");
  }
  const auto version = read_le<std::uint32_t>(in, "version");
  if (version != Checkpoint::kVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_le<std::uint64_t>(in, "header length");
  if (header_len > (1ULL << 30)) throw CheckpointError(path.string() + ": implausible header length");
  std::string header(header_len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_len))) {
    throw CheckpointError(path.string() + ": truncated header");
  }
  Checkpoint c;
  std::string stored_hash;
  try {
    const json h = json::parse(header);
    if (h.at("format") != "wscf-checkpoint") throw CheckpointError(path.string() + ": wrong format tag");
    c.stage = h.at("stage");
    c.completed_stages = h.at("completed_stages").get<std::vector<std::string>>();
    c.config = h.at("config");
    c.optimizer = h.at("optimizer");
    stored_hash = h.at("sha256");
    std::uint64_t expected_offset = 0;
    for (const auto& t : h.at("tensors")) {
      if (t.at("offset").get<std::uint64_t>() != expected_offset) {
        throw CheckpointError(path.string() + ": non-contiguous tensor offsets");
      }
      Tensor<float> tensor(t.at("shape").get<Shape>());
      if (tensor.size() != t.at("count").get<std::size_t>()) {
        throw CheckpointError(path.string() + ": shape/count mismatch for " + t.at("name").get<std::string>());
      }
      expected_offset += tensor.size() * sizeof(float);
      c.tensors.emplace_back(t.at("name").get<std::string>(), std::move(tensor));
    }
  } catch (const json::exception& e) {
    throw CheckpointError(path.string() + ": malformed header: " + e.what());
  }
  for (auto& [name, t] : c.tensors) {
    if (!in.read(reinterpret_cast<char*>(t.values().data()), static_cast<std::streamsize>(t.size() * sizeof(float)))) {
      throw CheckpointError(path.string() + ": truncated data for " + name);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError(path.string() + ": trailing bytes");
  if (digest(header_without_hash(c).dump(), c) != stored_hash) {
    throw CheckpointError(path.string() + ": content hash mismatch (corrupt checkpoint)");
  }
  return c;
}

ParameterSet<float>& parameter_group(mvce::MultiViewCounter& model, const std::string& group) {
  if (group == "svcc") return model.svcc_parameters();
  if (group == "homography") return model.homography_parameters();
  if (group == "fusion") return model.fusion_parameters();
  throw std::invalid_argument("unknown parameter group '" + group + "'");
}

Checkpoint make_checkpoint(mvce::Stage stage, const std::vector<mvce::Stage>& completed, mvce::MultiViewCounter& model,
                           mvce::StagedTrainer& trainer, const json& config) {
  Checkpoint c;
  c.stage = mvce::to_string(stage);
  for (auto s : completed) c.completed_stages.push_back(mvce::to_string(s));
  c.config = config;
  for (const char* g : kGroups) {
    for (const auto& [name, v] : parameter_group(model, g).items()) {
      c.tensors.emplace_back(std::string("param/") + g + "/" + name, v.value());
    }
  }
  const auto& opt = trainer.optimizer(stage);
  c.optimizer = {{"step_count", opt.step_count},
                 {"learning_rate", opt.learning_rate},
                 {"beta1", opt.beta1},
                 {"beta2", opt.beta2},
                 {"epsilon", opt.epsilon}};
  const auto& items = parameter_group(model, c.stage).items();
  if (!opt.first_moment.empty()) {
    for (std::size_t k = 0; k < items.size(); ++k) {
      c.tensors.emplace_back("adam.m/" + items[k].first, opt.first_moment.at(k));
      c.tensors.emplace_back("adam.v/" + items[k].first, opt.second_moment.at(k));
    }
  }
  return c;
}

void restore_parameters(const Checkpoint& c, mvce::MultiViewCounter& model, const std::vector<std::string>& groups) {
  for (const auto& g : groups) {
    for (const auto& [name, v] : parameter_group(model, g).items()) {
      const Tensor<float>& src = c.tensor("param/" + g + "/" + name);
      if (src.shape() != v.shape()) {
        throw CheckpointError("parameter " + g + "/" + name + " has shape " + to_string(src.shape()) +
                              " in the checkpoint but " + to_string(v.shape()) + " in the model");
      }
      Var<float> dst = v;
      dst.mutable_value() = src;
    }
  }
}

void restore_optimizer(const Checkpoint& c, mvce::MultiViewCounter& model, mvce::StagedTrainer& trainer) {
  const mvce::Stage stage = mvce::stage_from_string(c.stage);
  auto& opt = trainer.optimizer(stage);
  opt.step_count = c.optimizer.at("step_count");
  opt.learning_rate = c.optimizer.at("learning_rate");
  opt.beta1 = c.optimizer.at("beta1");
  opt.beta2 = c.optimizer.at("beta2");
  opt.epsilon = c.optimizer.at("epsilon");
  opt.first_moment.clear();
  opt.second_moment.clear();
  for (const auto& [name, v] : parameter_group(model, c.stage).items()) {
    if (!c.has("adam.m/" + name)) continue;
    opt.first_moment.push_back(c.tensor("adam.m/" + name));
    opt.second_moment.push_back(c.tensor("adam.v/" + name));
  }
}

}  // namespace wscf::cli
