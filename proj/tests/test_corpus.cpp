#include "doctest.h"

#include "lingemb/corpus.hpp"
#include "lingemb/error.hpp"
#include "support.hpp"

#include <functional>
#include <sstream>

using namespace lingemb;

namespace {

const char* kILikeDogs =
    "# sent_id = 1\n"
    "1\tI\tI\tPRON\tPRP\t_\t2\tnsubj\t_\t_\n"
    "2\tlike\tlike\tVERB\tVBP\t_\t0\troot\t_\t_\n"
    "3\tdogs\tdog\tNOUN\tNNS\t_\t2\tobj\t_\t_\n"
    "\n";

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::Io;
}

std::vector<AnnotatedSentence> parse(const std::string& text) {
    std::istringstream in(text);
    return parse_conllu(in);
}

}  // namespace

TEST_CASE("parse_conllu maps the columns of a simple sentence") {
    const auto sentences = parse(kILikeDogs);
    REQUIRE(sentences.size() == 1);
    const auto& s = sentences[0];
    REQUIRE(s.size() == 3);
    CHECK(s.tokens[s.root()].form == "like");
    CHECK(s.tokens[0].form == "i");  // lowercased
    CHECK(s.tokens[0].upos == "PRON");
    CHECK(s.tokens[2].lemma == "dog");
    CHECK(s.tokens[2].head == 2);
    CHECK(s.tokens[2].deprel == "obj");
}

TEST_CASE("parse_conllu edge cases") {
    CHECK(parse("").empty());

    SUBCASE("multiword tokens and empty nodes are skipped") {
        const auto s = parse(
            "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n"
            "2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n"
            "3\tgo\tgo\tVERB\t_\t_\t0\troot\t_\t_\n"
            "3.1\tgo\tgo\tVERB\t_\t_\t_\t_\t_\t_\n");
        REQUIRE(s.size() == 1);
        CHECK(s[0].size() == 3);
    }

    SUBCASE("non-integer HEAD reports its line") {
        try {
            parse("# c\n1\ta\ta\tX\t_\t_\tx\tdep\t_\t_\n");
            FAIL("no throw");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Parse);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }

    SUBCASE("wrong column count") {
        CHECK(kind_of([] { parse("1\ta\ta\tX\t_\t_\t0\troot\t_\n"); }) == ErrorKind::Parse);
    }

    SUBCASE("two roots") {
        CHECK(kind_of([] {
                  parse("1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t0\troot\t_\t_\n");
              }) == ErrorKind::Structure);
    }

    SUBCASE("cycle") {
        CHECK(kind_of([] {
                  parse(
                      "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n"
                      "2\tb\tb\tX\t_\t_\t3\tdep\t_\t_\n"
                      "3\tc\tc\tX\t_\t_\t2\tdep\t_\t_\n");
              }) == ErrorKind::Structure);
    }

    SUBCASE("self-loop and out-of-range head") {
        CHECK(kind_of([] { parse("1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t2\tdep\t_\t_\n"); }) ==
              ErrorKind::Structure);
        CHECK(kind_of([] { parse("1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t7\tdep\t_\t_\n"); }) ==
              ErrorKind::Structure);
    }

    SUBCASE("doc_id comments stick to following sentences") {
        const auto s = parse(std::string("# doc_id = d1\n") + kILikeDogs + kILikeDogs + "# doc_id = d2\n" +
                             kILikeDogs);
        REQUIRE(s.size() == 3);
        CHECK(s[0].doc_id == "d1");
        CHECK(s[1].doc_id == "d1");
        CHECK(s[2].doc_id == "d2");
    }
}

TEST_CASE("property: CoNLL-U round trip and head chains reach the root") {
    std::mt19937_64 rng(11);
    std::vector<AnnotatedSentence> sentences;
    for (int i = 0; i < 100; ++i) {
        sentences.push_back(testing::random_sentence(1 + rng() % 12, rng));
        if (i % 3 == 0) sentences.back().doc_id = "doc" + std::to_string(i);
    }
    // doc_id is sticky on re-parse; give every sentence one so equality holds.
    std::optional<std::string> last;
    for (auto& s : sentences) {
        if (s.doc_id) last = s.doc_id;
        s.doc_id = last;
    }
    std::ostringstream out;
    write_conllu(out, sentences);
    std::istringstream in(out.str());
    const auto reparsed = parse_conllu(in);
    CHECK(reparsed == sentences);

    for (const auto& s : reparsed) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            std::size_t cur = i + 1;
            std::size_t steps = 0;
            while (cur != 0 && steps <= s.size()) {
                cur = s.tokens[cur - 1].head;
                ++steps;
            }
            CHECK(cur == 0);
            CHECK(steps <= s.size());
        }
    }
}

TEST_CASE("parse_labeled_dataset") {
    SUBCASE("two rows with companion annotation") {
        std::istringstream csv("id,text,label\na,I like dogs,0\nb,\"You, are ugly!\",1\n");
        std::istringstream conllu(std::string("# doc_id = a\n") + kILikeDogs + "# doc_id = b\n" + kILikeDogs);
        const auto corpus = parse_labeled_dataset(csv, &conllu);
        CHECK(corpus.clean == 1);
        CHECK(corpus.harmful == 1);
        REQUIRE(corpus.size() == 2);
        CHECK(corpus.documents[1].text == "You, are ugly!");
        CHECK(corpus.documents[0].annotated());
        CHECK(corpus.documents[1].annotated());
    }

    SUBCASE("label outside {0,1}") {
        std::istringstream csv("id,text,label\nx,hello,2\n");
        try {
            parse_labeled_dataset(csv);
            FAIL("no throw");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Value);
            CHECK(std::string(e.what()).find("'x'") != std::string::npos);
        }
    }

    SUBCASE("duplicate id") {
        std::istringstream csv("id,text,label\nx,a,0\nx,b,1\n");
        CHECK(kind_of([&] { parse_labeled_dataset(csv); }) == ErrorKind::Duplicate);
    }

    SUBCASE("annotation without a dataset row") {
        std::istringstream csv("id,text,label\nx,a,0\n");
        std::istringstream conllu(std::string("# doc_id = y\n") + kILikeDogs);
        CHECK(kind_of([&] { parse_labeled_dataset(csv, &conllu); }) == ErrorKind::DanglingAnnotation);
    }

    SUBCASE("bad header") {
        std::istringstream csv("id,label,text\nx,0,a\n");
        CHECK(kind_of([&] { parse_labeled_dataset(csv); }) == ErrorKind::Parse);
    }

    SUBCASE("7% harmful at toy scale") {
        std::string text = "id,text,label\n";
        for (int i = 0; i < 100; ++i) text += "d" + std::to_string(i) + ",some text," + (i % 14 == 0 && i < 98 ? "1" : "0") + "\n";
        std::istringstream csv(text);
        const auto corpus = parse_labeled_dataset(csv);
        CHECK(corpus.harmful == 7);
        CHECK(corpus.clean == 93);
        CHECK(corpus.clean + corpus.harmful == corpus.size());
        CHECK_FALSE(corpus.documents[0].annotated());
    }

    SUBCASE("quoted fields may span lines") {
        std::istringstream csv("id,text,label\r\nq,\"line one\nline \"\"two\"\"\",1\r\n");
        const auto corpus = parse_labeled_dataset(csv);
        REQUIRE(corpus.size() == 1);
        CHECK(corpus.documents[0].text == "line one\nline \"two\"");
    }
}

TEST_CASE("tokenize_raw") {
    CHECK(tokenize_raw("You are ugly!") == std::vector<std::string>{"you", "are", "ugly", "!"});
    CHECK(tokenize_raw("").empty());
    CHECK(tokenize_raw("a  b") == std::vector<std::string>{"a", "b"});
    CHECK(tokenize_raw("\"Hi,\" he said...") ==
          std::vector<std::string>{"\"", "hi", ",", "\"", "he", "said", ".", ".", "."});
    CHECK(tokenize_raw("don't") == std::vector<std::string>{"don't"});
}
