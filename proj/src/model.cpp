#include "relu_exact/model.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <sstream>

namespace relu_exact {

namespace {
constexpr double kNormSlack = 1e-12;
}

void SampleSet::validate() const {
  if (points.cols() < 1) {
    throw ValidationError("sample set needs dimension n >= 1");
  }
  if (labels.size() != points.rows()) {
    throw ValidationError("label count does not match point count");
  }
  if (unit_ball) {
    for (int i = 0; i < points.rows(); ++i) {
      if (points.row(i).norm() > 1.0 + kNormSlack) {
        throw ValidationError("unit_ball sample set has a point with norm > 1");
      }
    }
  }
}

SampleSet make_sample_set(Eigen::MatrixXd points, Eigen::VectorXd labels,
                          bool unit_ball) {
  SampleSet s{std::move(points), std::move(labels), unit_ball};
  s.validate();
  return s;
}

void ReluNet::validate() const {
  const int units = k();
  if (alphas.size() != units || biases.size() != units) {
    throw ValidationError("alpha/bias count does not match unit count");
  }
  for (int j = 0; j < units; ++j) {
    if (alphas[j] != 1.0 && alphas[j] != -1.0) {
      throw ValidationError("alphas must be exactly +1 or -1");
    }
  }
  if (normalized) {
    for (int j = 0; j < units; ++j) {
      if (weights.row(j).norm() > 1.0 + kNormSlack) {
        throw ValidationError("normalized net has unit weight norm > 1");
      }
      if (biases[j] < -1.0 - kNormSlack || biases[j] > 1.0 + kNormSlack) {
        throw ValidationError("normalized net has bias outside [-1,1]");
      }
    }
  }
}

ReluNet make_relu_net(Eigen::VectorXd alphas, Eigen::MatrixXd weights,
                      Eigen::VectorXd biases, bool normalized) {
  ReluNet net{std::move(alphas), std::move(weights), std::move(biases),
              normalized};
  net.validate();
  return net;
}

double ReluNet::eval(const Eigen::VectorXd& x) const {
  return eval_net(*this, x);
}

ActivationPattern make_activation_pattern(int units, int samples) {
  ActivationPattern p;
  p.units = units;
  p.samples = samples;
  p.bits.assign(static_cast<std::size_t>(units) * samples, 0);
  return p;
}

double eval_unit(const Eigen::VectorXd& w, double b, const Eigen::VectorXd& x) {
  if (w.size() != x.size()) {
    throw ValidationError("eval_unit dimension mismatch");
  }
  return std::max(0.0, w.dot(x) + b);
}

double eval_net(const ReluNet& net, const Eigen::VectorXd& x) {
  if (net.k() > 0 && net.n() != x.size()) {
    throw ValidationError("eval_net dimension mismatch");
  }
  double out = 0.0;
  for (int j = 0; j < net.k(); ++j) {
    const double a = net.weights.row(j).dot(x) + net.biases[j];
    if (a > 0.0) out += net.alphas[j] * a;
  }
  return out;
}

double squared_loss(const ReluNet& net, const SampleSet& s) {
  if (net.k() > 0 && net.n() != s.n()) {
    throw ValidationError("squared_loss dimension mismatch");
  }
  double total = 0.0;
  for (int i = 0; i < s.m(); ++i) {
    const double r = eval_net(net, s.points.row(i)) - s.labels[i];
    total += r * r;
  }
  return total;
}

double gamma_cont_loss(const ReluNet& net, const SampleSet& s, double gamma) {
  if (gamma <= 0.0) {
    throw ValidationError("gamma_cont_loss needs gamma > 0");
  }
  if (s.m() == 0) return 0.0;
  double total = 0.0;
  for (int i = 0; i < s.m(); ++i) {
    if (s.labels[i] != 0.0) continue;
    const double v = eval_net(net, s.points.row(i));
    if (v <= 0.0) continue;
    total += v >= gamma ? 1.0 : v / gamma;
  }
  return total / s.m();
}

double false_positive_rate(const ReluNet& net, const SampleSet& s) {
  if (s.m() == 0) {
    throw ValidationError("false_positive_rate needs m >= 1");
  }
  int count = 0;
  for (int i = 0; i < s.m(); ++i) {
    if (s.labels[i] == 0.0 && eval_net(net, s.points.row(i)) > 0.0) ++count;
  }
  return static_cast<double>(count) / s.m();
}

// --- serialization -------------------------------------------------------

using nlohmann::json;

std::string sample_set_to_json(const SampleSet& s) {
  json j;
  j["n"] = s.n();
  j["m"] = s.m();
  json pts = json::array();
  for (int i = 0; i < s.m(); ++i) {
    json row = json::array();
    for (int c = 0; c < s.n(); ++c) row.push_back(s.points(i, c));
    pts.push_back(std::move(row));
  }
  j["points"] = std::move(pts);
  json lab = json::array();
  for (int i = 0; i < s.m(); ++i) lab.push_back(s.labels[i]);
  j["labels"] = std::move(lab);
  return j.dump();
}

SampleSet sample_set_from_json(const std::string& text) {
  json j = json::parse(text);
  const int n = j.at("n").get<int>();
  const int m = j.at("m").get<int>();
  if (n < 1 || m < 0) throw ValidationError("bad sample set dimensions");
  Eigen::MatrixXd points(m, n);
  const auto& pts = j.at("points");
  if (static_cast<int>(pts.size()) != m) {
    throw ValidationError("points length does not match m");
  }
  for (int i = 0; i < m; ++i) {
    const auto& row = pts.at(i);
    if (static_cast<int>(row.size()) != n) {
      throw ValidationError("point dimension does not match n");
    }
    for (int c = 0; c < n; ++c) points(i, c) = row.at(c).get<double>();
  }
  const auto& lab = j.at("labels");
  if (static_cast<int>(lab.size()) != m) {
    throw ValidationError("labels length does not match m");
  }
  Eigen::VectorXd labels(m);
  for (int i = 0; i < m; ++i) labels[i] = lab.at(i).get<double>();
  return make_sample_set(std::move(points), std::move(labels));
}

std::string sample_set_to_csv(const SampleSet& s) {
  std::ostringstream out;
  for (int c = 0; c < s.n(); ++c) out << "x" << c << ",";
  out << "label\n";
  out.precision(17);
  for (int i = 0; i < s.m(); ++i) {
    for (int c = 0; c < s.n(); ++c) out << s.points(i, c) << ",";
    out << s.labels[i] << "\n";
  }
  return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) throw ValidationError("trailing junk in number: " + text);
    return v;
  } catch (const std::invalid_argument&) {
    throw ValidationError("malformed number in CSV: " + text);
  }
}

}  // namespace

SampleSet sample_set_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("CSV sample set needs a header row");
  }
  const auto header = split_csv_line(line);
  if (header.size() < 2) {
    throw ValidationError("CSV header needs at least one feature and a label");
  }
  const int n = static_cast<int>(header.size()) - 1;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != n + 1) {
      throw ValidationError("CSV row width does not match header");
    }
    std::vector<double> row(n + 1);
    for (int c = 0; c <= n; ++c) row[c] = parse_double(fields[c]);
    rows.push_back(std::move(row));
  }
  const int m = static_cast<int>(rows.size());
  Eigen::MatrixXd points(m, n);
  Eigen::VectorXd labels(m);
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < n; ++c) points(i, c) = rows[i][c];
    labels[i] = rows[i][n];
  }
  return make_sample_set(std::move(points), std::move(labels));
}

std::string relu_net_to_json(const ReluNet& net) {
  json j;
  j["k"] = net.k();
  json alphas = json::array();
  for (int i = 0; i < net.k(); ++i) alphas.push_back(static_cast<int>(net.alphas[i]));
  j["alphas"] = std::move(alphas);
  json weights = json::array();
  for (int r = 0; r < net.k(); ++r) {
    json row = json::array();
    for (int c = 0; c < net.n(); ++c) row.push_back(net.weights(r, c));
    weights.push_back(std::move(row));
  }
  j["weights"] = std::move(weights);
  json biases = json::array();
  for (int i = 0; i < net.k(); ++i) biases.push_back(net.biases[i]);
  j["biases"] = std::move(biases);
  return j.dump();
}

ReluNet relu_net_from_json(const std::string& text) {
  json j = json::parse(text);
  const int k = j.at("k").get<int>();
  if (k < 0) throw ValidationError("bad unit count");
  const auto& w = j.at("weights");
  if (static_cast<int>(w.size()) != k) {
    throw ValidationError("weights length does not match k");
  }
  const int n = k > 0 ? static_cast<int>(w.at(0).size()) : 0;
  Eigen::MatrixXd weights(k, n);
  for (int r = 0; r < k; ++r) {
    const auto& row = w.at(r);
    if (static_cast<int>(row.size()) != n) {
      throw ValidationError("ragged weight rows");
    }
    for (int c = 0; c < n; ++c) weights(r, c) = row.at(c).get<double>();
  }
  const auto& a = j.at("alphas");
  const auto& b = j.at("biases");
  if (static_cast<int>(a.size()) != k || static_cast<int>(b.size()) != k) {
    throw ValidationError("alphas/biases length does not match k");
  }
  Eigen::VectorXd alphas(k), biases(k);
  for (int i = 0; i < k; ++i) {
    alphas[i] = a.at(i).get<double>();
    biases[i] = b.at(i).get<double>();
  }
  return make_relu_net(std::move(alphas), std::move(weights), std::move(biases));
}

}  // namespace relu_exact
