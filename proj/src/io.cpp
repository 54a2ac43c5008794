#include "fdntune/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>

namespace fdntune {

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void put_u16(std::ofstream& out, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
}

std::uint16_t get_u16(std::ifstream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace

void write_wav(const std::filesystem::path& path, const ImpulseResponse& ir) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  const std::uint32_t n = static_cast<std::uint32_t>(ir.samples.size());
  const std::uint32_t data_bytes = n * 4;
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, 3);  // IEEE float
  put_u16(out, 1);  // mono
  const std::uint32_t fs = static_cast<std::uint32_t>(ir.sample_rate);
  put_u32(out, fs);
  put_u32(out, fs * 4);
  put_u16(out, 4);
  put_u16(out, 32);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (double s : ir.samples) {
    const float f = static_cast<float>(s);
    char b[4];
    std::memcpy(b, &f, 4);
    out.write(b, 4);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

ImpulseResponse read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  char tag[5] = {0};
  in.read(tag, 4);
  if (std::strncmp(tag, "RIFF", 4) != 0)
    throw IoError("not a RIFF file: " + path.string());
  get_u32(in);
  in.read(tag, 4);
  if (std::strncmp(tag, "WAVE", 4) != 0)
    throw IoError("not a WAVE file: " + path.string());
  ImpulseResponse ir;
  std::uint16_t format = 0, channels = 0, bits = 0;
  while (in.read(tag, 4)) {
    const std::uint32_t chunk = get_u32(in);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      format = get_u16(in);
      channels = get_u16(in);
      ir.sample_rate = get_u32(in);
      get_u32(in);
      get_u16(in);
      bits = get_u16(in);
      in.ignore(chunk - 16);
    } else if (std::strncmp(tag, "data", 4) == 0) {
      if (format != 3 || channels != 1 || bits != 32)
        throw IoError("unsupported WAV layout: " + path.string());
      const std::uint32_t n = chunk / 4;
      ir.samples.resize(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        char b[4];
        in.read(b, 4);
        float f;
        std::memcpy(&f, b, 4);
        ir.samples[i] = f;
      }
      return ir;
    } else {
      in.ignore(chunk + (chunk & 1));
    }
  }
  throw IoError("no data chunk: " + path.string());
}

void write_ir_csv(const std::filesystem::path& path,
                  const ImpulseResponse& ir) {
  CsvWriter csv(path);
  csv.header({"index", "sample"});
  for (int i = 0; i < ir.length(); ++i) {
    csv.begin_row();
    csv.field(i);
    csv.field(ir.samples[i]);
    csv.end_row();
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw IoError("cannot open for writing: " + path.string());
}

void CsvWriter::header(const std::vector<std::string>& names) {
  begin_row();
  for (const auto& n : names) field(n);
  end_row();
}

void CsvWriter::begin_row() { first_in_row_ = true; }

void CsvWriter::field(const std::string& s) {
  if (!first_in_row_) out_ << ',';
  first_in_row_ = false;
  out_ << s;
}

void CsvWriter::field(double v) { field(format_double(v)); }

void CsvWriter::field(int v) { field(std::to_string(v)); }

void CsvWriter::end_row() { out_ << '\n'; }

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace fdntune
