#include <cstring>
#include <fstream>
#include <sstream>

#include "iegan/common.hpp"
#include "iegan/trainer.hpp"

namespace iegan {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'I', 'E', 'G', 'A', 'N', 'C', 'K', '1'};
constexpr uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const fs::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open checkpoint for writing: " + path.string());
  }
  void bytes(const void* data, size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void u32(uint32_t v) { bytes(&v, sizeof v); }
  void i64(int64_t v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    i64(static_cast<int64_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const torch::Tensor& t) {
    auto c = t.detach().cpu().contiguous();
    const uint32_t dtype = (c.scalar_type() == torch::kFloat64) ? 1
                           : (c.scalar_type() == torch::kInt64) ? 2
                                                                : 0;
    if (dtype == 0) c = c.to(torch::kFloat32);
    u32(dtype);
    u32(static_cast<uint32_t>(c.dim()));
    for (auto d : c.sizes()) i64(d);
    const size_t n = static_cast<size_t>(c.numel()) * c.element_size();
    i64(static_cast<int64_t>(n));
    bytes(c.data_ptr(), n);
  }
  void close() {
    out_.flush();
    if (!out_) throw IoError("checkpoint write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : in_(path, std::ios::binary) {
    if (!fs::exists(path)) throw IoError("checkpoint file not found: " + path.string());
    if (!in_) throw IoError("cannot open checkpoint: " + path.string());
  }
  void bytes(void* data, size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw DataError("corrupt checkpoint: unexpected end of file");
    }
  }
  uint32_t u32() { uint32_t v; bytes(&v, sizeof v); return v; }
  int64_t i64() { int64_t v; bytes(&v, sizeof v); return v; }
  std::string str() {
    const auto n = i64();
    if (n < 0 || n > (1 << 26)) throw DataError("corrupt checkpoint: bad string length");
    std::string s(static_cast<size_t>(n), '\0');
    bytes(s.data(), s.size());
    return s;
  }
  torch::Tensor tensor() {
    const auto dtype_tag = u32();
    const auto ndim = u32();
    if (ndim > 8) throw DataError("corrupt checkpoint: bad tensor rank");
    std::vector<int64_t> dims(ndim);
    for (auto& d : dims) d = i64();
    const auto nbytes = i64();
    auto dtype = dtype_tag == 1 ? torch::kFloat64
                 : dtype_tag == 2 ? torch::kInt64
                                  : torch::kFloat32;
    auto t = torch::empty(dims, dtype);
    if (nbytes != static_cast<int64_t>(t.numel() * t.element_size())) {
      throw DataError("corrupt checkpoint: tensor size mismatch");
    }
    bytes(t.data_ptr(), static_cast<size_t>(nbytes));
    return t;
  }

 private:
  std::ifstream in_;
};

std::vector<std::pair<std::string, torch::nn::Module*>> module_list(
    TrainState& s) {
  return {{"enc_x", s.enc_x.get()}, {"enc_y", s.enc_y.get()},
          {"gen_xy", s.gen_xy.get()}, {"gen_yx", s.gen_yx.get()},
          {"disc_x", s.disc_x.get()}, {"disc_y", s.disc_y.get()}};
}

std::vector<torch::optim::AdamW*> optimizer_list(TrainState& s) {
  return {s.opt_enc.get(), s.opt_disc.get(), s.opt_gen.get()};
}

void write_module(Writer& w, torch::nn::Module& m) {
  auto params = m.named_parameters();
  auto buffers = m.named_buffers();
  w.i64(static_cast<int64_t>(params.size() + buffers.size()));
  for (const auto& p : params) {
    w.str(p.key());
    w.tensor(p.value());
  }
  for (const auto& b : buffers) {
    w.str(b.key());
    w.tensor(b.value());
  }
}

void read_module(Reader& r, torch::nn::Module& m) {
  torch::NoGradGuard no_grad;
  auto params = m.named_parameters();
  auto buffers = m.named_buffers();
  const auto count = r.i64();
  if (count != static_cast<int64_t>(params.size() + buffers.size())) {
    throw DataError("corrupt checkpoint: module entry count mismatch");
  }
  for (int64_t i = 0; i < count; ++i) {
    auto name = r.str();
    auto value = r.tensor();
    torch::Tensor* target = params.find(name);
    if (target == nullptr) target = buffers.find(name);
    if (target == nullptr) {
      throw DataError("corrupt checkpoint: unknown tensor name " + name);
    }
    if (target->sizes() != value.sizes()) {
      throw DataError("corrupt checkpoint: shape mismatch for " + name);
    }
    target->copy_(value);
  }
}

void write_optimizer(Writer& w, torch::optim::AdamW& opt) {
  for (auto& group : opt.param_groups()) {
    for (auto& p : group.params()) {
      auto it = opt.state().find(p.unsafeGetTensorImpl());
      if (it == opt.state().end()) {
        w.u32(0);
        continue;
      }
      auto& s = static_cast<torch::optim::AdamWParamState&>(*it->second);
      w.u32(1);
      w.i64(s.step());
      w.tensor(s.exp_avg());
      w.tensor(s.exp_avg_sq());
    }
  }
}

void read_optimizer(Reader& r, torch::optim::AdamW& opt) {
  for (auto& group : opt.param_groups()) {
    for (auto& p : group.params()) {
      if (r.u32() == 0) continue;
      auto state = std::make_unique<torch::optim::AdamWParamState>();
      state->step(r.i64());
      state->exp_avg(r.tensor());
      state->exp_avg_sq(r.tensor());
      opt.state()[p.unsafeGetTensorImpl()] = std::move(state);
    }
  }
}

}  // namespace

void checkpoint_save(TrainState& state, const fs::path& path) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  RunConfig rc;
  rc.train = state.cfg;
  w.str(rc.to_text());
  w.i64(state.iteration);
  std::ostringstream rng_state;
  rng_state << state.rng;
  w.str(rng_state.str());
  for (auto& [name, module] : module_list(state)) {
    w.str(name);
    write_module(w, *module);
  }
  for (auto* opt : optimizer_list(state)) {
    write_optimizer(w, *opt);
  }
  w.close();
}

TrainState checkpoint_load(const fs::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw DataError("corrupt checkpoint: bad magic");
  }
  const auto version = r.u32();
  if (version != kVersion) {
    throw ConfigError("unsupported checkpoint version: " +
                      std::to_string(version));
  }
  auto cfg = RunConfig::from_text(r.str()).train;
  auto state = TrainState::create(cfg);
  state.iteration = r.i64();
  std::istringstream rng_state(r.str());
  rng_state >> state.rng;
  if (!rng_state) throw DataError("corrupt checkpoint: bad RNG state");
  for (auto& [name, module] : module_list(state)) {
    auto stored = r.str();
    if (stored != name) {
      throw DataError("corrupt checkpoint: expected module " + name +
                      ", found " + stored);
    }
    read_module(r, *module);
  }
  for (auto* opt : optimizer_list(state)) {
    read_optimizer(r, *opt);
  }
  return state;
}

}  // namespace iegan
