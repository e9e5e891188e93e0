#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sys/wait.h>

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(CASCADE_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string line_with(const std::string& text, const std::string& key) {
  const auto at = text.find(key);
  if (at == std::string::npos) return {};
  return text.substr(at, text.find('\n', at) - at);
}

}  // namespace

TEST_CASE("generate is deterministic for a fixed seed") {
  const auto a = run("generate --seed 7 --prompt 'a quiet street'");
  const auto b = run("generate --seed 7 --prompt 'a quiet street'");
  const auto c = run("generate --seed 8 --prompt 'a quiet street'");
  REQUIRE(a.code == 0);
  CHECK(line_with(a.out, "output_hash") == line_with(b.out, "output_hash"));
  CHECK(line_with(a.out, "output_hash") != line_with(c.out, "output_hash"));
  CHECK(line_with(a.out, "iterations") == "iterations: 17");
}

TEST_CASE("generate writes trace and fps files and applies switches") {
  const auto dir = std::filesystem::temp_directory_path() / "cascade_cli_test";
  std::filesystem::create_directories(dir);
  const auto trace = dir / "trace.jsonl";
  const auto csv = dir / "fps.csv";
  const auto r = run("generate --switch '8:recache:a storm' --trace " + trace.string() + " --fps-csv " + csv.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("extra_passes 7") != std::string::npos);
  std::ifstream in(trace);
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 17);
  std::ifstream fps(csv);
  std::string header;
  std::getline(fps, header);
  CHECK(header == "block,video_frames,elapsed,fps");
  std::filesystem::remove_all(dir);
}

TEST_CASE("config flags mirror fields and bad input exits 1") {
  CHECK(run("generate --offset 5 --workers 1").out.find("iterations: 65") != std::string::npos);
  CHECK(run("generate --W 2 --offset 1").code == 1);
  CHECK(run("generate --offset banana").code == 1);
  CHECK(run("generate --no-such-flag").code == 1);
  CHECK(run("generate --switch nonsense").code == 1);
  CHECK(run("").code == 1);
  CHECK(run("generate --help").code == 0);
}

TEST_CASE("environment overrides apply under flags") {
  const auto r = run("generate");
  setenv("CASCADE_OFFSET", "2", 1);
  const auto env = run("generate");
  const auto both = run("generate --offset 3");
  unsetenv("CASCADE_OFFSET");
  CHECK(line_with(env.out, "iterations") == "iterations: 29");
  CHECK(line_with(both.out, "iterations") == "iterations: 41");
  CHECK(r.code == 0);
}

TEST_CASE("ablate prints one row per grid cell") {
  const auto r = run("ablate --worker-list 1,5");
  REQUIRE(r.code == 0);
  int rows = 0;
  for (std::size_t at = 0; (at = r.out.find('\n', at)) != std::string::npos; ++at) ++rows;
  CHECK(rows == 1 + 5 * 2 * 2);
}

TEST_CASE("bench reports the modeled speedup") {
  const auto r = run("bench --blocks 40 --worker-list 5 --pass_per_frame 0");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("G=5 modeled speedup 4.55x") != std::string::npos);
}
