#include "filterstab/model_io.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "filterstab/error.h"

namespace filterstab {
namespace {

using nlohmann::json;

const json& Field(const json& doc, const char* name) {
  if (!doc.is_object() || !doc.contains(name)) {
    throw ValidationError(std::string("model: missing field \"") + name +
                          "\"");
  }
  return doc.at(name);
}

int IntField(const json& doc, const char* name) {
  const json& v = Field(doc, name);
  if (!v.is_number_integer()) {
    throw ValidationError(std::string("model: field \"") + name +
                          "\" must be an integer");
  }
  return v.get<int>();
}

Vector ToVector(const json& v, const std::string& what) {
  if (!v.is_array()) throw ValidationError(what + " must be an array");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ValidationError(what + "[" + std::to_string(i) +
                            "] is not a number");
    }
    out(i) = v[i].get<double>();
  }
  return out;
}

template <typename MatrixT>
MatrixT ToMatrix(const json& v, Eigen::Index rows, Eigen::Index cols,
                 const std::string& what) {
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != rows) {
    throw DimensionMismatch(what + " must have " + std::to_string(rows) +
                            " rows");
  }
  MatrixT out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = v[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DimensionMismatch(what + " row " + std::to_string(r) +
                              " must have " + std::to_string(cols) +
                              " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        throw ValidationError(what + "[" + std::to_string(r) + "][" +
                              std::to_string(c) + "] is not a number");
      }
      out(r, c) = row[c].get<typename MatrixT::Scalar>();
    }
  }
  return out;
}

}  // namespace

FinitePomp ModelFromJson(const json& doc) {
  const int n = IntField(doc, "n");
  const int m = IntField(doc, "m");
  const int k = IntField(doc, "K");
  if (n <= 0 || m <= 0 || k <= 0) {
    throw ValidationError("model: n, m, K must be positive");
  }
  Matrix transition = ToMatrix<Matrix>(Field(doc, "T"), n, n, "T");
  Vector noise = ToVector(Field(doc, "Q"), "Q");
  if (noise.size() != m) {
    throw DimensionMismatch("Q must have m = " + std::to_string(m) +
                            " entries");
  }
  IndexMatrix assignment = ToMatrix<IndexMatrix>(Field(doc, "H"), n, m, "H");
  FinitePomp model(std::move(transition), std::move(noise),
                   std::move(assignment), k);
  if (doc.contains("B")) {
    const Matrix stored = ToMatrix<Matrix>(doc.at("B"), n, k, "B");
    const double diff = (stored - model.channel()).cwiseAbs().maxCoeff();
    if (diff > kProbabilityTolerance) {
      std::ostringstream msg;
      msg << "model: stored B differs from the channel derived from (Q, H) by "
          << diff;
      throw ValidationError(msg.str());
    }
  }
  return model;
}

json ModelToJson(const FinitePomp& model) {
  json doc;
  doc["n"] = model.num_states();
  doc["m"] = model.num_noise();
  doc["K"] = model.num_outputs();
  json t = json::array();
  for (Eigen::Index r = 0; r < model.transition().rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < model.transition().cols(); ++c) {
      row.push_back(model.transition()(r, c));
    }
    t.push_back(row);
  }
  doc["T"] = t;
  doc["Q"] = std::vector<double>(model.noise().data(),
                                 model.noise().data() + model.noise().size());
  json h = json::array();
  for (Eigen::Index r = 0; r < model.assignment().rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < model.assignment().cols(); ++c) {
      row.push_back(model.assignment()(r, c));
    }
    h.push_back(row);
  }
  doc["H"] = h;
  return doc;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json ReadJsonFile(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

FinitePomp LoadModel(const std::filesystem::path& path) {
  try {
    return ModelFromJson(ReadJsonFile(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

FiniteDist ParseFinitePrior(const json& spec, int num_states) {
  if (spec.is_string()) {
    const std::string text = spec.get<std::string>();
    if (text == "uniform") return FiniteDist::Uniform(num_states);
    if (!text.empty() && (text.front() == '[' || text.front() == '{')) {
      try {
        return ParseFinitePrior(json::parse(text), num_states);
      } catch (const json::parse_error& e) {
        throw ValidationError(std::string("prior: ") + e.what());
      }
    }
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos) {
          throw std::invalid_argument(item);
        }
      } catch (const std::logic_error&) {
        throw ValidationError("prior: cannot parse \"" + item + "\"");
      }
    }
    return ParseFinitePrior(json(values), num_states);
  }
  if (spec.is_object() && spec.contains("point")) {
    return FiniteDist::PointMass(num_states, spec.at("point").get<int>());
  }
  const Vector probs = ToVector(spec, "prior");
  if (probs.size() != num_states) {
    throw DimensionMismatch("prior has " + std::to_string(probs.size()) +
                            " entries, model has " +
                            std::to_string(num_states) + " states");
  }
  return FiniteDist(probs);
}

FinitePomp FourStateExample() {
  Matrix transition(4, 4);
  // clang-format off
  transition << 0.0,  0.25, 0.25, 0.5,
                0.5,  0.0,  0.0,  0.5,
                0.0,  0.25, 0.25, 0.5,
                0.5,  0.0,  0.0,  0.5;
  // clang-format on
  Vector noise = Vector::Ones(1);
  IndexMatrix assignment(4, 1);
  assignment << 1, 1, 0, 0;
  return FinitePomp(std::move(transition), std::move(noise),
                    std::move(assignment), 2);
}

}  // namespace filterstab
