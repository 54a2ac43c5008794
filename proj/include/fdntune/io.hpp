#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fdntune/types.hpp"

namespace fdntune {

// 32-bit float mono WAV.
void write_wav(const std::filesystem::path& path, const ImpulseResponse& ir);
ImpulseResponse read_wav(const std::filesystem::path& path);

void write_ir_csv(const std::filesystem::path& path, const ImpulseResponse& ir);

// Deterministic numeric formatting shared by all CSV writers.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  void header(const std::vector<std::string>& names);
  void begin_row();
  void field(const std::string& s);
  void field(double v);
  void field(int v);
  void end_row();

 private:
  std::ofstream out_;
  bool first_in_row_ = true;
};

void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

}  // namespace fdntune
