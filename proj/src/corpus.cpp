#include <algorithm>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "skm/bvh.hpp"
#include "skm/training.hpp"

namespace skm {

Corpus load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("corpus directory not found: " + dir);
  std::map<std::string, std::vector<fs::path>> groups;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) {
      for (const auto& f : fs::directory_iterator(entry.path())) {
        if (f.is_regular_file() && f.path().extension() == ".bvh") {
          groups[entry.path().filename().string()].push_back(f.path());
        }
      }
    } else if (entry.is_regular_file() && entry.path().extension() == ".bvh") {
      const std::string stem = entry.path().stem().string();
      groups[stem.substr(0, stem.find("__"))].push_back(entry.path());
    }
  }
  Corpus corpus;
  for (auto& [name, files] : groups) {
    std::sort(files.begin(), files.end());
    CharacterMotions cm;
    for (std::size_t i = 0; i < files.size(); ++i) {
      BvhDocument doc = load_bvh(files[i].string());
      if (i == 0) {
        cm.skeleton = doc.skeleton;
        cm.height = character_height(doc.skeleton);
      } else if (!(doc.skeleton.topology == cm.skeleton.topology) ||
                 !doc.skeleton.offsets.isApprox(cm.skeleton.offsets, 1e-9)) {
        throw std::runtime_error("character " + name + ": " + files[i].string() +
                                 " has a different skeleton");
      }
      cm.clips.push_back(std::move(doc.clip));
    }
    corpus.push_back(std::move(cm));
  }
  if (corpus.empty()) throw std::runtime_error("no .bvh files under " + dir);
  check_corpus(corpus);
  return corpus;
}

}  // namespace skm
