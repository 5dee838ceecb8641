#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mns/bitstream.hpp"
#include "mns/decoder.hpp"
#include "mns/encoder.hpp"
#include "mns/image.hpp"
#include "mns/metrics.hpp"

namespace mns::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2, kData = 3 };

/// Input/output failure or malformed file contents.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flag values that parse but make no sense.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes through a sibling temp file so a failed run never leaves partial output.
inline void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::filesystem::remove(tmp);
      throw DataError("cannot write '" + path + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot write '" + path + "': " + ec.message());
  }
}

inline void write_text_atomic(const std::string& path, const std::string& text) {
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline GrayImage read_pgm_file(const std::string& path) {
  const auto bytes = read_file(path);
  return load_pgm(bytes);
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

inline Mode parse_mode(const std::string& s) {
  if (s == "ns") return Mode::no_search;
  if (s == "mns") return Mode::mns;
  throw UsageError("unknown mode '" + s + "' (expected ns or mns)");
}

inline std::string with_suffix(const std::string& path, const std::string& suffix) {
  const std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

/// Runs one CLI invocation; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Fractal no-search / modified no-search image codec"};
  app.require_subcommand(1);

  // encode
  auto* enc = app.add_subcommand("encode", "Encode a PGM image to a .mns stream");
  std::string enc_in, enc_out, enc_mode = "mns", enc_t2 = "on";
  EncoderConfig ecfg;
  enc->add_option("--in", enc_in, "input PGM")->required();
  enc->add_option("--out", enc_out, "output .mns")->required();
  enc->add_option("--mode", enc_mode, "ns or mns")->check(CLI::IsMember({"ns", "mns"}));
  enc->add_option("--e1", ecfg.thresholds[0], "level-1 RMS threshold");
  enc->add_option("--e2", ecfg.thresholds[1], "level-2 RMS threshold");
  enc->add_option("--e3", ecfg.thresholds[2], "level-3 RMS threshold");
  enc->add_option("--tmean", ecfg.mean_tol, "phase-2 sub-block mean tolerance");
  enc->add_option("--technique2", enc_t2, "share level ids in level-4 quartets")
      ->check(CLI::IsMember({"on", "off"}));

  // decode
  auto* dec = app.add_subcommand("decode", "Decode a .mns stream to PGM");
  std::string dec_in, dec_out;
  DecodeConfig dcfg;
  dec->add_option("--in", dec_in, "input .mns")->required();
  dec->add_option("--out", dec_out, "output PGM")->required();
  dec->add_option("--iters", dcfg.max_iters, "maximum decoder iterations")->check(CLI::PositiveNumber);
  dec->add_option("--stop-delta", dcfg.stop_delta, "stop when the max pixel change is below this")
      ->check(CLI::NonNegativeNumber);

  // metrics
  auto* met = app.add_subcommand("metrics", "MSE and PSNR between two PGM images");
  std::string met_a, met_b;
  met->add_option("--a", met_a, "first PGM")->required();
  met->add_option("--b", met_b, "second PGM")->required();

  // bench rd
  auto* bench = app.add_subcommand("bench", "Benchmarks");
  bench->require_subcommand(1);
  auto* rd = bench->add_subcommand("rd", "Rate-distortion / timing sweep");
  std::string rd_in, rd_csv_path, rd_modes = "ns,mns", rd_grid = "4,6,8,12", rd_t2 = "on";
  double rd_tmean = 16.0;
  bool rd_no_timing = false;
  rd->add_option("--in", rd_in, "input PGM")->required();
  rd->add_option("--modes", rd_modes, "comma-separated modes (ns,mns)");
  rd->add_option("--e-grid", rd_grid, "comma-separated thresholds, applied to E1=E2=E3");
  rd->add_option("--csv", rd_csv_path, "output CSV")->required();
  rd->add_option("--tmean", rd_tmean, "phase-2 sub-block mean tolerance");
  rd->add_option("--technique2", rd_t2, "on, off, or on,off");
  rd->add_flag("--no-timing", rd_no_timing, "write encode_s as 0 for reproducible CSV bytes");

  // analyze offsets
  auto* analyze = app.add_subcommand("analyze", "Analyses");
  analyze->require_subcommand(1);
  auto* offs = analyze->add_subcommand("offsets", "Full-search domain/range offset histograms");
  std::string off_in, off_csv;
  int off_range = 8, off_stride = 1;
  offs->add_option("--in", off_in, "input PGM")->required();
  offs->add_option("--range-size", off_range, "range block side (2, 4, 8 or 16)")
      ->check(CLI::IsMember({2, 4, 8, 16}));
  offs->add_option("--stride", off_stride, "domain lattice stride")->check(CLI::PositiveNumber);
  offs->add_option("--csv", off_csv, "output CSV (per-axis); joint table goes to <stem>_joint.csv")
      ->required();

  std::vector<const char*> argv{"mns"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (enc->parsed()) {
      ecfg.mode = parse_mode(enc_mode);
      ecfg.technique2 = enc_t2 == "on";
      try {
        ecfg.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const GrayImage img = read_pgm_file(enc_in);
      const QuadtreeCode code = encode_quadtree(img, ecfg);
      const auto bytes = write_stream(code);
      write_file_atomic(enc_out, bytes);
      const CodeTally t = tally(code);
      out << "leaves " << t.total() << " (l1 " << t.per_level[0] << ", l2 " << t.per_level[1]
          << ", l3 " << t.per_level[2] << ", l4 " << t.per_level[3] << "), phase2 " << t.phase2
          << ", bytes " << bytes.size() << ", bpp "
          << static_cast<double>(bytes.size() * 8) / static_cast<double>(img.area()) << "\n";
    } else if (dec->parsed()) {
      const auto bytes = read_file(dec_in);
      const QuadtreeCode code = read_stream(bytes);
      std::vector<double> deltas;
      const GrayImage img =
          to_image(decode_raster(code, dcfg, &deltas), code.orig_w, code.orig_h);
      write_file_atomic(dec_out, save_pgm(img));
      out << "decoded " << img.width() << "x" << img.height() << " in " << deltas.size()
          << " iterations\n";
    } else if (met->parsed()) {
      const GrayImage a = read_pgm_file(met_a);
      const GrayImage b = read_pgm_file(met_b);
      if (a.width() != b.width() || a.height() != b.height()) {
        throw DataError("image dimensions differ");
      }
      const double m = mse(a, b);
      out << "MSE: " << m << "\nPSNR: " << format_db(psnr(a, b)) << "\n";
    } else if (rd->parsed()) {
      SweepGrid grid;
      grid.modes.clear();
      std::stringstream ms(rd_modes);
      for (std::string m; std::getline(ms, m, ',');) grid.modes.push_back(parse_mode(m));
      if (grid.modes.empty()) throw UsageError("--modes: empty list");
      grid.thresholds.clear();
      for (double e : parse_double_list(rd_grid, "--e-grid")) {
        if (!(e > 0.0)) throw UsageError("--e-grid: thresholds must be > 0");
        grid.thresholds.push_back({e, e, e});
      }
      grid.technique2.clear();
      std::stringstream ts(rd_t2);
      for (std::string t; std::getline(ts, t, ',');) {
        if (t != "on" && t != "off") throw UsageError("--technique2: expected on/off, got '" + t + "'");
        grid.technique2.push_back(t == "on");
      }
      if (grid.technique2.empty()) throw UsageError("--technique2: empty list");
      if (rd_tmean < 0.0) throw UsageError("--tmean must be >= 0");
      EncoderConfig base;
      base.mean_tol = rd_tmean;
      const GrayImage img = read_pgm_file(rd_in);
      const auto rows = rd_sweep(img, grid, base);
      write_text_atomic(rd_csv_path, rd_csv(rows, !rd_no_timing));
      for (const auto& p : rows) {
        out << mode_name(p.mode) << " E=" << p.thresholds[0] << " t2=" << (p.technique2 ? "on" : "off")
            << ": bpp " << p.bpp << ", psnr " << format_db(p.psnr) << " dB, level ids "
            << 100.0 * static_cast<double>(p.level_id_bits) / static_cast<double>(p.bits)
            << "% of stream\n";
      }
    } else if (offs->parsed()) {
      const GrayImage img = read_pgm_file(off_in);
      EncoderConfig cfg;
      cfg.full_search_step = off_stride;
      const SearchResult res = encode_full_search(img, off_range, cfg);
      const OffsetHistogram h = offset_histogram(res.offsets);
      write_text_atomic(off_csv, histogram_marginals_csv(h));
      write_text_atomic(with_suffix(off_csv, "_joint"), histogram_joint_csv(h));
      auto join = [](const std::vector<int>& v) {
        std::string s;
        for (int x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
        return s;
      };
      out << "ranges " << h.total << ", x mode " << join(marginal_modes(h.x)) << ", y mode "
          << join(marginal_modes(h.y)) << "\n";
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kData;
  } catch (const GeometryError& e) {
    err << "geometry error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace mns::cli
