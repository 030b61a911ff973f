#pragma once

#include <filesystem>
#include <string>

#include "sqa/corpus.hpp"
#include "sqa/resolver.hpp"

namespace sqa::test {

inline std::filesystem::path data_dir() { return SQA_TEST_DATA; }
inline std::filesystem::path minisuite_dir() { return data_dir() / "minisuite"; }

inline const Corpus& fixture() {
  static const Corpus c = Corpus::load(data_dir() / "fixture_500.jsonl");
  return c;
}

inline const EntityResolver& fixture_resolver() {
  static const EntityResolver r(fixture());
  return r;
}

// Five articles, hand-checked. Ids and years are chosen so that every
// ordering tie-break is exercised.
inline const char* kTinyCorpus = R"({"id":"W1","title":"Spikes","year":2019,"citation_count":10,"authors":[{"id":"A1","name":"Ana Lima"},{"id":"A2","name":"Bo Chen"}],"venue":{"id":"V1","name":"Neural Letters"},"institutions":[{"id":"I1","name":"University of Oxford","aliases":["Oxford University"]}],"topics":[{"id":"T1","name":"Machine Learning"}],"subject_areas":[{"id":"S1","name":"Neuroscience"}],"sdgs":[{"id":"G3","name":"Good Health and Well-being"}],"references":[]}
{"id":"W2","title":"Gates","year":2020,"citation_count":30,"authors":["A2",{"id":"A3","name":"Chen Bo"}],"venue":{"id":"V2","name":"Circuits"},"institutions":[{"id":"I2","name":"Politecnico di Milano"}],"topics":["T1",{"id":"T2","name":"Reconfigurable Computing"}],"subject_areas":[{"id":"S2","name":"Computer Science"}],"sdgs":[],"references":["W1"]}
{"id":"W3","title":"Maps","year":2020,"citation_count":10,"authors":["A1"],"venue":"V1","institutions":["I1","I2"],"topics":["T2"],"subject_areas":["S1","S2"],"sdgs":["G3"],"references":["W1","W2"]}
{"id":"W4","title":"Quiet","year":2021,"citation_count":0,"authors":["A3"],"venue":"V2","institutions":["I2"],"topics":[],"subject_areas":["S2"],"sdgs":[],"references":[]}
{"id":"W5","title":"Loud","year":2021,"citation_count":0,"authors":["A3","A1"],"venue":"V2","institutions":["I2"],"topics":["T1"],"subject_areas":["S2"],"sdgs":[],"references":["W3"]}
)";

inline const Corpus& tiny() {
  static const Corpus c = Corpus::parse(std::string_view(kTinyCorpus), "tiny");
  return c;
}

}  // namespace sqa::test
