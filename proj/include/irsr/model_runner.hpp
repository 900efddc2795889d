#pragma once

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

#include "irsr/error.hpp"
#include "irsr/image.hpp"
#include "irsr/png_io.hpp"
#include "irsr/resample.hpp"

namespace irsr {

struct BuiltinEngine {
  Filter filter = Filter::bicubic();
};

struct ExternalEngine {
  // Must contain {input_dir} and {output_dir}; {scale} is optional.
  std::string command_template;
  std::chrono::seconds timeout{600};
};

/// An SR engine plus the window multiple its inputs are reflect-padded to.
struct ModelSpec {
  std::string name;
  std::variant<BuiltinEngine, ExternalEngine> engine;
  int window_multiple = 1;
  int scale = kScale;

  static ModelSpec builtin(Filter filter, std::string name = {}) {
    ModelSpec m;
    m.name = name.empty() ? std::string(to_string(filter.kind)) : std::move(name);
    m.engine = BuiltinEngine{filter};
    return m;
  }

  static ModelSpec external(std::string command_template, int window_multiple = 16,
                            std::chrono::seconds timeout = std::chrono::seconds{600},
                            std::string name = "external") {
    ModelSpec m;
    m.name = std::move(name);
    m.engine = ExternalEngine{std::move(command_template), timeout};
    m.window_multiple = window_multiple;
    m.validate();
    return m;
  }

  bool is_external() const noexcept { return std::holds_alternative<ExternalEngine>(engine); }

  void validate() const {
    if (window_multiple < 1) throw ValidationError("window multiple must be >= 1");
    if (scale != kScale) throw ValidationError("only x4 models are supported");
    if (const auto* ext = std::get_if<ExternalEngine>(&engine)) {
      for (const char* key : {"{input_dir}", "{output_dir}"}) {
        if (ext->command_template.find(key) == std::string::npos) {
          throw ValidationError("external command template for '" + name + "' lacks " + key);
        }
      }
      if (ext->timeout.count() <= 0) throw ValidationError("external timeout must be positive");
    }
  }
};

template <typename Sample>
struct PaddedImage {
  BasicImage<Sample> image;
  int original_width = 0;
  int original_height = 0;
};

namespace detail {

// Mirror without repeating the edge sample: ... 2 1 | 0 1 2 ... n-1 | n-2 ...
inline int mirror_reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

inline int round_up(int v, int m) { return (v + m - 1) / m * m; }

}  // namespace detail

/// Grows width and height on the right/bottom to the next multiple of `m`
/// by reflection; the original region is untouched.
template <typename Sample>
PaddedImage<Sample> pad_reflect_to_multiple(const BasicImage<Sample>& img, int m) {
  if (m < 1) throw ValidationError("padding multiple must be >= 1");
  const int w = img.width();
  const int h = img.height();
  const int pw = detail::round_up(w, m);
  const int ph = detail::round_up(h, m);
  if (pw == w && ph == h) return {img, w, h};
  if ((pw - w) > w - 1 || (ph - h) > h - 1) {
    throw ValidationError("image " + std::to_string(w) + "x" + std::to_string(h) +
                          " is too small to reflect-pad to a multiple of " + std::to_string(m));
  }
  BasicImage<Sample> out(pw, ph, img.channels(), img.bit_depth());
  for (int y = 0; y < ph; ++y) {
    const int sy = detail::mirror_reflect(y, h);
    for (int x = 0; x < pw; ++x) {
      const int sx = detail::mirror_reflect(x, w);
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return {std::move(out), w, h};
}

/// Top-left crop to exactly (scale * orig_w) x (scale * orig_h).
template <typename Sample>
BasicImage<Sample> crop_to_scale(const BasicImage<Sample>& sr, int orig_w, int orig_h, int scale) {
  const int tw = orig_w * scale;
  const int th = orig_h * scale;
  if (sr.width() < tw || sr.height() < th) {
    throw ValidationError("SR output " + std::to_string(sr.width()) + "x" +
                          std::to_string(sr.height()) + " is smaller than target " +
                          std::to_string(tw) + "x" + std::to_string(th));
  }
  if (sr.width() == tw && sr.height() == th) return sr;
  BasicImage<Sample> out(tw, th, sr.channels(), sr.bit_depth());
  for (int y = 0; y < th; ++y)
    for (int x = 0; x < tw; ++x)
      for (int c = 0; c < sr.channels(); ++c) out.at(x, y, c) = sr.at(x, y, c);
  return out;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& prefix = "irsr") {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 100; ++attempt) {
      auto candidate = base / (prefix + "-" + std::to_string(::getpid()) + "-" +
                               std::to_string(counter++) + "-" + std::to_string(rd() % 1000000));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = std::move(candidate);
        return;
      }
    }
    throw IoError("cannot create a temporary directory under " + base.string());
  }
  ~TempDir() {
    std::error_code ec;
    if (!path_.empty()) std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

private:
  std::filesystem::path path_;
};

namespace detail {

inline std::string replace_all(std::string s, const std::string& key, const std::string& value) {
  for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
    s.replace(pos, key.size(), value);
  }
  return s;
}

inline std::string read_tail(const std::filesystem::path& p, std::size_t max_bytes = 4000) {
  std::ifstream in(p, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.size() > max_bytes) text = "..." + text.substr(text.size() - max_bytes);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

struct CommandResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string diagnostics;  // combined stdout/stderr tail
};

// Runs `command` under /bin/sh in its own process group with HARNESS_SCALE set.
inline CommandResult run_shell(const std::string& command, std::chrono::milliseconds timeout,
                               const std::filesystem::path& log_path, int scale) {
  // Only async-signal-safe calls are allowed after fork, so argv/envp are built here.
  std::vector<std::string> env_strings;
  for (char** e = environ; e && *e; ++e) {
    if (std::string_view(*e).starts_with("HARNESS_SCALE=")) continue;
    env_strings.emplace_back(*e);
  }
  env_strings.push_back("HARNESS_SCALE=" + std::to_string(scale));
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::string sh = "sh", dash_c = "-c", cmd = command;
  char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
  const std::string log = log_path.string();

  const pid_t pid = ::fork();
  if (pid < 0) throw EngineError("fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    ::execve("/bin/sh", argv, envp.data());
    ::_exit(127);
  }
  ::setpgid(pid, pid);

  CommandResult result;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  auto delay = std::chrono::milliseconds(1);
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw EngineError("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(delay);
    delay = std::min(delay * 2, std::chrono::milliseconds(50));
  }
  if (!result.timed_out) {
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  }
  result.diagnostics = read_tail(log_path);
  return result;
}

inline std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::ranges::sort(out);
  return out;
}

inline std::string instantiate_command(const ExternalEngine& ext,
                                       const std::filesystem::path& in_dir,
                                       const std::filesystem::path& out_dir, int scale) {
  std::string cmd = ext.command_template;
  cmd = replace_all(cmd, "{input_dir}", std::filesystem::absolute(in_dir).string());
  cmd = replace_all(cmd, "{output_dir}", std::filesystem::absolute(out_dir).string());
  cmd = replace_all(cmd, "{scale}", std::to_string(scale));
  return cmd;
}

}  // namespace detail

/// Runs an external engine over every PNG in `lr_dir`, writing into `out_dir`,
/// and checks that exactly one x4 output exists per input.
inline void run_external_batch(const ModelSpec& model, const std::filesystem::path& lr_dir,
                               const std::filesystem::path& out_dir) {
  model.validate();
  const auto* ext = std::get_if<ExternalEngine>(&model.engine);
  if (!ext) throw ValidationError("run_external_batch requires an external model");

  const auto inputs = detail::list_pngs(lr_dir);
  if (inputs.empty()) throw ValidationError("no PNG inputs in " + lr_dir.string());
  std::filesystem::create_directories(out_dir);

  TempDir scratch("irsr-log");
  const auto command = detail::instantiate_command(*ext, lr_dir, out_dir, model.scale);
  const auto result = detail::run_shell(command, ext->timeout, scratch.path() / "engine.log",
                                        model.scale);
  const auto tag = "model '" + model.name + "'";
  if (result.timed_out) {
    throw EngineError(tag + " timed out after " + std::to_string(ext->timeout.count()) +
                      " s; partial output discarded" +
                      (result.diagnostics.empty() ? "" : "\n" + result.diagnostics));
  }
  if (result.exit_code != 0) {
    throw EngineError(tag + " exited with status " + std::to_string(result.exit_code) +
                      (result.diagnostics.empty() ? "" : "\n" + result.diagnostics));
  }

  std::set<std::string> expected;
  for (const auto& p : inputs) expected.insert(p.filename().string());
  for (const auto& p : detail::list_pngs(out_dir)) {
    if (!expected.contains(p.filename().string())) {
      throw EngineError(tag + " produced unexpected output file " + p.filename().string());
    }
  }
  for (const auto& in : inputs) {
    const auto out = out_dir / in.filename();
    if (!std::filesystem::exists(out)) {
      throw EngineError(tag + " did not produce output for " + in.filename().string());
    }
    const Image lr = load_image(in);
    const Image sr = load_image(out);
    if (sr.width() != lr.width() * model.scale || sr.height() != lr.height() * model.scale) {
      throw EngineError(tag + ": model output shape mismatch for " + in.filename().string() +
                        ": got " + std::to_string(sr.width()) + "x" + std::to_string(sr.height()) +
                        ", expected " + std::to_string(lr.width() * model.scale) + "x" +
                        std::to_string(lr.height() * model.scale));
    }
  }
}

/// Runs a batch of LR images through an engine: pad, super-resolve, crop.
/// External engines see the whole batch in a single invocation.
inline std::vector<Image> infer_batch(const ModelSpec& model, const std::vector<Image>& lrs) {
  model.validate();
  std::vector<PaddedImage<std::uint16_t>> padded;
  padded.reserve(lrs.size());
  for (const auto& lr : lrs) padded.push_back(pad_reflect_to_multiple(lr, model.window_multiple));

  std::vector<Image> out;
  out.reserve(lrs.size());
  if (const auto* builtin = std::get_if<BuiltinEngine>(&model.engine)) {
    for (const auto& p : padded) {
      out.push_back(crop_to_scale(upscale_x4(p.image, builtin->filter), p.original_width,
                                  p.original_height, model.scale));
    }
    return out;
  }

  TempDir work("irsr-batch");
  const auto in_dir = work.path() / "in";
  const auto out_dir = work.path() / "out";
  std::filesystem::create_directories(in_dir);
  std::filesystem::create_directories(out_dir);
  auto file_name = [](std::size_t i) {
    std::ostringstream os;
    os << "img_" << std::setw(4) << std::setfill('0') << i << ".png";
    return os.str();
  };
  for (std::size_t i = 0; i < padded.size(); ++i) save_image(padded[i].image, in_dir / file_name(i));
  run_external_batch(model, in_dir, out_dir);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    Image sr = load_image(out_dir / file_name(i));
    if (sr.bit_depth() != lrs[i].bit_depth()) {
      throw EngineError("model '" + model.name + "' changed bit depth for " + file_name(i));
    }
    out.push_back(crop_to_scale(sr, padded[i].original_width, padded[i].original_height,
                                model.scale));
  }
  return out;
}

inline Image infer(const ModelSpec& model, const Image& lr) {
  return std::move(infer_batch(model, {lr}).front());
}

}  // namespace irsr
