#include "backdrop/dataset.hpp"

#include <sstream>

#include "backdrop/util.hpp"

namespace backdrop {

std::vector<TrainingExample> load_dataset(const std::string& text, const Cfg& g) {
  std::vector<TrainingExample> out;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("dataset line " + std::to_string(lineno) +
                               ": expected 'utterance<TAB>labels'");
    }
    TrainingExample ex;
    ex.utterance = tokenize(line.substr(0, tab));
    try {
      ex.ds = parse_labels(line.substr(tab + 1), g);
      parse_ds(ex.ds, g);  // must be a complete, valid sequence
    } catch (const DsError& e) {
      throw std::runtime_error("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<TrainingExample> load_dataset_file(const std::string& path, const Cfg& g) {
  return load_dataset(read_file(path), g);
}

std::string dump_dataset(const std::vector<TrainingExample>& data, const Cfg& g) {
  std::string out;
  for (const TrainingExample& ex : data) {
    out += join(ex.utterance) + "\t" + labels_to_string(ex.ds, g) + "\n";
  }
  return out;
}

}  // namespace backdrop
