// Conformance stub for the external-engine protocol.
//
//   irsr-stub-engine [--mode ok|fail|omit|badshape|sleep] <input_dir> <output_dir>
//
// "ok" writes a nearest-neighbour x4 upscale of every input PNG under the
// same filename. The other modes inject one protocol fault each.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include "irsr/model_runner.hpp"
#include "irsr/png_io.hpp"
#include "irsr/resample.hpp"

int main(int argc, char** argv) {
  std::string mode = "ok";
  int arg = 1;
  if (argc > 2 && std::string(argv[1]) == "--mode") {
    mode = argv[2];
    arg = 3;
  }
  if (argc - arg != 2) {
    std::cerr << "usage: irsr-stub-engine [--mode ok|fail|omit|badshape|sleep] <in> <out>\n";
    return 64;
  }
  const std::filesystem::path in_dir = argv[arg];
  const std::filesystem::path out_dir = argv[arg + 1];
  int scale = 4;
  if (const char* env = std::getenv("HARNESS_SCALE")) scale = std::atoi(env);

  if (mode == "fail") {
    std::cerr << "stub: injected failure\n";
    return 1;
  }
  try {
    const auto inputs = irsr::detail::list_pngs(in_dir);
    std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (mode == "omit" && i + 1 == inputs.size()) break;
      const auto lr = irsr::load_image(inputs[i]);
      const int factor = mode == "badshape" ? scale / 2 : scale;
      const auto sr = irsr::resize(lr, lr.width() * factor, lr.height() * factor,
                                   irsr::Filter::nearest(), false);
      irsr::save_image(sr, out_dir / inputs[i].filename());
      if (mode == "sleep") std::this_thread::sleep_for(std::chrono::seconds(30));
    }
  } catch (const std::exception& e) {
    std::cerr << "stub: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
