#pragma once

#include <string>

#include "expanse/corpus.hpp"

namespace expanse::fixtures {

inline const std::string kFigure1Tree =
    "(ROOT (S (NP (PRP i)) (ADVP (RB truly)) (VP (VBP love) (NP (PRP you)) "
    "(PP (IN with) (NP (DT all) (PRP$ my) (NN heart))))))";

inline TokenSeq toks(const std::string& s) { return split_ws(s); }

// "my favorite sport is basketball" with its four inserted modifiers.
inline ExpansionPair table1_pair() {
  return make_pair("table1", Language::en, toks("my favorite sport is basketball"),
                   toks("when it comes to sports , my absolute favorite sport of all time is basketball , "
                        "and i 'm a huge fan of james"),
                   {{0, 6}, {7, 8}, {10, 13}, {15, 24}}, Provenance::REF);
}

// The informative expansion used for the Info-Gain templates.
inline ExpansionPair informative_pair() {
  return make_pair("informative", Language::en, toks("my favorite sport is basketball"),
                   toks("besides tennis , my personal favorite sport of all time is basketball , and i 'm a huge fan ."),
                   {{0, 3}, {4, 5}, {7, 10}, {12, 20}}, Provenance::MODEL);
}

inline TaggedText meat_sentence() {
  TaggedText t;
  t.id = "meat";
  t.tokens = toks("we offer our buyers a wide range of meat , including pork , beef , and lamb .");
  t.pos = std::vector<std::string>{"PRP", "VBP", "PRP$", "NNS", "DT", "JJ", "NN", "IN", "NN",
                                   ",",   "VBG", "NN",   ",",   "NN", ",",  "CC", "NN", "."};
  return t;
}

// Chinese source with noun/verb anchors and three named entities.
inline TaggedText table5_source() {
  TaggedText t;
  t.id = "table5";
  t.tokens = toks("林丹 在 伦敦奥运会 击败 了 李宗伟 ， 获得 了 奥运冠军");
  t.pos = std::vector<std::string>{"nr", "p", "ns", "v", "u", "nr", "w", "v", "u", "n"};
  t.entities = std::vector<Span>{{0, 1}, {2, 3}, {5, 6}};
  return t;
}

}  // namespace expanse::fixtures
