#pragma once

#include <fstream>
#include <string>

#include "qaconv/errors.hpp"

namespace qaconv {

/// Pipeline configuration, line-based key=value files. Matching, training and
/// temporal-lifting defaults follow the reference setup: s=1, tau=100,
/// sigma=200, K=10, alpha=0.2, gamma=2, batch 32, lr 0.01 decayed by 0.1
/// after epoch 40, 60 epochs.
struct Config {
  int kernel_size = 1;

  double tau = 100.0;
  double sigma = 200.0;
  int pivots = 10;
  double alpha = 0.2;

  double gamma = 2.0;
  int batch_size = 32;
  double lr = 0.01;
  double lr_decay = 0.1;
  int lr_decay_epoch = 40;
  int epochs = 60;
  std::string update_mode = "direct";
  double ema_decay = 0.5;

  int k1 = 20;
  int k2 = 6;
  double lambda = 0.3;

  double threshold = 0.5;
  double max_frac = 0.8;
  double flip_prob = 0.5;
  int r_max = 10;
  int workers = 0;  ///< 0 = hardware concurrency

  void set(const std::string& key, const std::string& value) {
    try {
      if (key == "kernel_size") kernel_size = std::stoi(value);
      else if (key == "tau") tau = std::stod(value);
      else if (key == "sigma") sigma = std::stod(value);
      else if (key == "pivots") pivots = std::stoi(value);
      else if (key == "alpha") alpha = std::stod(value);
      else if (key == "gamma") gamma = std::stod(value);
      else if (key == "batch_size") batch_size = std::stoi(value);
      else if (key == "lr") lr = std::stod(value);
      else if (key == "lr_decay") lr_decay = std::stod(value);
      else if (key == "lr_decay_epoch") lr_decay_epoch = std::stoi(value);
      else if (key == "epochs") epochs = std::stoi(value);
      else if (key == "update_mode") update_mode = value;
      else if (key == "ema_decay") ema_decay = std::stod(value);
      else if (key == "k1") k1 = std::stoi(value);
      else if (key == "k2") k2 = std::stoi(value);
      else if (key == "lambda") lambda = std::stod(value);
      else if (key == "threshold") threshold = std::stod(value);
      else if (key == "max_frac") max_frac = std::stod(value);
      else if (key == "flip_prob") flip_prob = std::stod(value);
      else if (key == "r_max") r_max = std::stoi(value);
      else if (key == "workers") workers = std::stoi(value);
      else throw FormatError("config: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw FormatError("config: bad value for '" + key + "': " + value);
    } catch (const std::out_of_range&) {
      throw FormatError("config: value out of range for '" + key + "': " + value);
    }
    if (update_mode != "direct" && update_mode != "ema")
      throw FormatError("config: update_mode must be 'direct' or 'ema'");
  }

  static Config from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open config: " + path);
    Config cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const auto strip = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string stripped = strip(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw FormatError("config line " + std::to_string(line_no) + ": expected key=value");
      cfg.set(strip(stripped.substr(0, eq)), strip(stripped.substr(eq + 1)));
    }
    return cfg;
  }
};

}  // namespace qaconv
