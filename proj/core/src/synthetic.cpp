#include "wmt/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string_view>
#include <unordered_map>

#include "wmt/error.hpp"
#include "wmt/key_value.hpp"
#include "wmt/rng.hpp"
#include "wmt/tokenizer.hpp"

namespace wmt {

namespace {

enum class Gender { male, female, neuter };

struct Noun {
    std::string_view word;
    Gender gender;
};

// Master lists. A tier uses a prefix of each list, so list order matters.
// Common nouns avoid the endings the suffix tagger reads as VERB/ADJ/ADV.
constexpr std::array kNouns = {
    Noun{"man", Gender::male},        Noun{"woman", Gender::female},   Noun{"dog", Gender::neuter},
    Noun{"cat", Gender::neuter},      Noun{"house", Gender::neuter},   Noun{"car", Gender::neuter},
    Noun{"book", Gender::neuter},     Noun{"table", Gender::neuter},   Noun{"door", Gender::neuter},
    Noun{"window", Gender::neuter},   Noun{"city", Gender::neuter},    Noun{"tree", Gender::neuter},
    Noun{"river", Gender::neuter},    Noun{"friend", Gender::female},  Noun{"teacher", Gender::female},
    Noun{"doctor", Gender::male},     Noun{"letter", Gender::neuter},  Noun{"song", Gender::neuter},
    Noun{"box", Gender::neuter},      Noun{"ball", Gender::neuter},    Noun{"room", Gender::neuter},
    Noun{"road", Gender::neuter},     Noun{"garden", Gender::neuter},  Noun{"apple", Gender::neuter},
    Noun{"bird", Gender::neuter},     Noun{"horse", Gender::neuter},   Noun{"chair", Gender::neuter},
    Noun{"phone", Gender::neuter},    Noun{"story", Gender::neuter},   Noun{"child", Gender::neuter},
    Noun{"son", Gender::male},        Noun{"daughter", Gender::female}, Noun{"king", Gender::male},
    Noun{"ship", Gender::neuter},     Noun{"bridge", Gender::neuter},  Noun{"school", Gender::neuter},
    Noun{"shop", Gender::neuter},     Noun{"street", Gender::neuter},  Noun{"idea", Gender::neuter},
    Noun{"question", Gender::neuter}, Noun{"problem", Gender::neuter}, Noun{"game", Gender::neuter},
    Noun{"film", Gender::neuter},     Noun{"money", Gender::neuter},   Noun{"job", Gender::neuter},
    Noun{"plan", Gender::neuter},     Noun{"team", Gender::neuter},    Noun{"world", Gender::neuter},
    Noun{"water", Gender::neuter},    Noun{"paper", Gender::neuter},   Noun{"bag", Gender::neuter},
    Noun{"bottle", Gender::neuter},   Noun{"cup", Gender::neuter},     Noun{"key", Gender::neuter},
    Noun{"lamp", Gender::neuter},     Noun{"market", Gender::neuter},  Noun{"village", Gender::neuter},
    Noun{"forest", Gender::neuter},   Noun{"mountain", Gender::neuter}, Noun{"island", Gender::neuter},
    Noun{"train", Gender::neuter},    Noun{"bus", Gender::neuter},     Noun{"station", Gender::neuter},
    Noun{"office", Gender::neuter},   Noun{"kitchen", Gender::neuter}, Noun{"coat", Gender::neuter},
    Noun{"shirt", Gender::neuter},    Noun{"hat", Gender::neuter},     Noun{"shoe", Gender::neuter},
    Noun{"ticket", Gender::neuter},   Noun{"card", Gender::neuter},    Noun{"gift", Gender::neuter},
    Noun{"cake", Gender::neuter},     Noun{"bread", Gender::neuter},   Noun{"milk", Gender::neuter},
    Noun{"coffee", Gender::neuter},   Noun{"tea", Gender::neuter},     Noun{"fish", Gender::neuter},
    Noun{"egg", Gender::neuter},      Noun{"flower", Gender::neuter},  Noun{"stone", Gender::neuter},
    Noun{"wall", Gender::neuter},     Noun{"floor", Gender::neuter},   Noun{"roof", Gender::neuter},
    Noun{"yard", Gender::neuter},     Noun{"farm", Gender::neuter},    Noun{"lake", Gender::neuter},
    Noun{"sea", Gender::neuter},      Noun{"beach", Gender::neuter},   Noun{"boat", Gender::neuter},
    Noun{"plane", Gender::neuter},    Noun{"camera", Gender::neuter},  Noun{"clock", Gender::neuter},
    Noun{"watch", Gender::neuter},    Noun{"radio", Gender::neuter},   Noun{"guitar", Gender::neuter},
    Noun{"piano", Gender::neuter},    Noun{"poem", Gender::neuter},    Noun{"novel", Gender::neuter},
    Noun{"lesson", Gender::neuter},   Noun{"exam", Gender::neuter},    Noun{"report", Gender::neuter},
    Noun{"party", Gender::neuter},    Noun{"dinner", Gender::neuter},  Noun{"lunch", Gender::neuter},
    Noun{"neighbor", Gender::male},   Noun{"student", Gender::male},   Noun{"lawyer", Gender::female},
    Noun{"nurse", Gender::female},    Noun{"farmer", Gender::male},    Noun{"singer", Gender::female},
    Noun{"captain", Gender::male},    Noun{"soldier", Gender::male},   Noun{"judge", Gender::male},
    Noun{"brother", Gender::male},    Noun{"sister", Gender::female},  Noun{"mother", Gender::female},
    Noun{"father", Gender::male},     Noun{"uncle", Gender::male},     Noun{"aunt", Gender::female},
    Noun{"girl", Gender::female},     Noun{"boy", Gender::male},       Noun{"queen", Gender::female},
};

constexpr std::array<std::string_view, 60> kTechNouns = {
    "file",      "server",   "kernel",     "module",   "folder",   "directory", "menu",
    "button",    "widget",   "database",   "query",    "script",   "packet",    "socket",
    "thread",    "process",  "cache",      "buffer",   "compiler", "library",   "plugin",
    "daemon",    "cursor",   "toolbar",    "dialog",   "panel",    "collection", "playlist",
    "geometry",  "client",   "password",   "account",  "backup",   "repository", "branch",
    "commit",    "patch",    "bug",        "node",     "cluster",  "router",    "firewall",
    "printer",   "device",   "partition",  "volume",   "bookmark", "tab",       "shortcut",
    "template",  "theme",    "session",    "user",     "keyboard", "screen",    "disk",
    "command",   "column",   "schema",     "token",
};

constexpr std::array<std::string_view, 72> kVerbs = {
    "opened",   "closed",   "lifted",    "moved",    "painted",  "cleaned",   "watched",
    "visited",  "helped",   "called",    "asked",    "carried",  "pushed",    "pulled",
    "wanted",   "liked",    "loved",     "needed",   "finished", "showed",    "followed",
    "answered", "collected", "created",  "played",   "cooked",   "washed",    "fixed",
    "checked",  "changed",  "started",   "stopped",  "climbed",  "crossed",   "dropped",
    "kicked",   "touched",  "filled",    "locked",   "packed",   "planted",   "repaired",
    "returned", "solved",   "studied",   "walked",   "warned",   "wrapped",   "borrowed",
    "noticed",  "admired",  "thanked",   "trusted",  "blamed",   "praised",   "hated",
    "feared",   "envied",   "invited",   "greeted",  "ignored",  "respected", "attacked",
    "defended", "served",   "hired",     "chased",   "hugged",   "married",   "rescued",
    "punished", "remembered",
};

constexpr std::array<std::string_view, 44> kTechVerbs = {
    "installed",  "removed",   "deleted",    "updated",   "selected",  "compiled",
    "configured", "mounted",   "launched",   "enabled",   "disabled",  "downloaded",
    "uploaded",   "edited",    "tested",     "saved",     "loaded",    "copied",
    "printed",    "renamed",   "restarted",  "merged",    "cached",    "parsed",
    "encrypted",  "decrypted", "formatted",  "scanned",   "exported",  "imported",
    "archived",   "patched",   "debugged",   "deployed",  "indexed",   "queried",
    "rebooted",   "refreshed", "resized",    "restored",  "validated", "converted",
    "executed",   "extracted",
};

struct Phrasal {
    std::string_view verb;
    std::string_view particle;
};

constexpr std::array kPhrasalVerbs = {
    Phrasal{"turned", "off"},  Phrasal{"picked", "up"},    Phrasal{"looked", "after"},
    Phrasal{"called", "back"}, Phrasal{"checked", "out"},  Phrasal{"filled", "in"},
    Phrasal{"backed", "up"},   Phrasal{"logged", "in"},    Phrasal{"cleaned", "up"},
    Phrasal{"handed", "over"}, Phrasal{"signed", "up"},    Phrasal{"plugged", "in"},
    Phrasal{"switched", "off"}, Phrasal{"printed", "out"}, Phrasal{"turned", "on"},
    Phrasal{"locked", "up"},
};

constexpr std::array<std::string_view, 56> kAdjectives = {
    "beautiful", "careful",    "famous",     "dangerous", "comfortable", "nervous",   "curious",
    "generous",  "jealous",    "grateful",   "successful", "anxious",    "cheerful",  "wonderful",
    "powerful",  "peaceful",   "colorful",   "careless",  "helpless",    "useless",   "serious",
    "delicious", "enormous",   "gorgeous",   "massive",   "attractive",  "sensitive", "visible",
    "possible",  "terrible",   "horrible",   "incredible", "capable",    "valuable",  "suitable",
    "central",   "normal",     "formal",     "classic",   "electric",    "magic",     "plastic",
    "foolish",   "selfish",    "childish",   "stylish",   "expensive",   "natural",   "local",
    "useful",    "helpful",    "active",     "reliable",  "honorable",   "fearless",  "tactful",
};

constexpr std::array<std::string_view, 24> kTechAdjectives = {
    "digital",    "virtual",    "optional",     "global",    "portable",  "readable",
    "executable", "compatible", "configurable", "interactive", "graphical", "logical",
    "physical",   "technical",  "automatic",    "dynamic",   "static",    "numeric",
    "generic",    "critical",   "external",     "internal",  "writable",  "editable",
};

constexpr std::array<std::string_view, 20> kAdverbs = {
    "quickly",  "slowly",  "carefully", "quietly", "suddenly", "finally",       "really",
    "easily",   "rarely",  "usually",   "happily", "angrily",  "loudly",        "gently",
    "proudly",  "silently", "recently", "correctly", "manually", "automatically",
};

struct Name {
    std::string_view word;
    Gender gender;
};

constexpr std::array kNames = {
    Name{"Bob", Gender::male},     Name{"Alice", Gender::female}, Name{"Charles", Gender::male},
    Name{"Anna", Gender::female},  Name{"John", Gender::male},    Name{"Mary", Gender::female},
    Name{"Peter", Gender::male},   Name{"Susan", Gender::female}, Name{"Paul", Gender::male},
    Name{"Kate", Gender::female},  Name{"Tom", Gender::male},     Name{"Emma", Gender::female},
    Name{"David", Gender::male},   Name{"Laura", Gender::female}, Name{"Mark", Gender::male},
    Name{"Julia", Gender::female}, Name{"Frank", Gender::male},   Name{"Helen", Gender::female},
    Name{"George", Gender::male},  Name{"Lucy", Gender::female},
};

constexpr std::array<std::string_view, 20> kAbbreviations = {
    "URL", "HTTP", "PHP", "CPU", "USB",  "KDE",  "GNOME", "SQL", "PDF", "DNS",
    "SSH", "XML",  "API", "GPU", "RAM", "JSON", "HTML",  "CSS", "FTP", "VPN",
};

constexpr std::array<std::string_view, 7> kPronouns = {"i", "we", "you", "they", "he", "she", "it"};
constexpr std::array<std::string_view, 10> kPrepositions = {"in",  "with", "on",    "to",   "from",
                                                            "at",  "for",  "under", "into", "over"};
constexpr std::array<std::string_view, 8> kNumbers = {"2", "3", "4", "8", "10", "16", "64", "128"};

constexpr std::array<std::string_view, 30> kSyllables = {
    "ka", "lo", "mi", "ra", "te", "su", "no", "vi", "da", "re", "po", "zu", "shi", "ne", "to",
    "ba", "ku", "ve", "ly", "go", "ri", "sa", "me", "fu", "ta", "ni", "ho", "pe", "gu", "ze",
};

std::uint64_t fnv1a(std::string_view s, std::uint64_t salt) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(salt);
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') {
        s[0] = static_cast<char>(s[0] - 'a' + 'A');
    }
    return s;
}

std::string plural(std::string_view noun) {
    std::string w(noun);
    const auto ends = [&](std::string_view suf) {
        return w.size() >= suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (ends("s") || ends("x") || ends("ch") || ends("sh")) {
        return w + "es";
    }
    if (ends("y") && w.size() > 1 && std::string_view("aeiou").find(w[w.size() - 2]) == std::string_view::npos) {
        return w.substr(0, w.size() - 1) + "ies";
    }
    return w + "s";
}

/// Pseudo-language lexicon: one unique syllable word per target lexeme.
class SourceLexicon {
public:
    static const SourceLexicon& instance() {
        static const SourceLexicon lexicon;
        return lexicon;
    }

    const std::string& word(std::string_view lexeme) const {
        const auto it = words_.find(lower(lexeme));
        if (it == words_.end()) {
            throw ContractError("no source word for lexeme '" + std::string(lexeme) + "'");
        }
        return it->second;
    }

private:
    SourceLexicon() {
        std::vector<std::string> lexemes;
        for (const auto& n : kNouns) lexemes.emplace_back(n.word);
        for (auto w : kTechNouns) lexemes.emplace_back(w);
        for (auto w : kVerbs) lexemes.emplace_back(w);
        for (auto w : kTechVerbs) lexemes.emplace_back(w);
        for (const auto& p : kPhrasalVerbs) {
            lexemes.push_back(std::string(p.verb) + " " + std::string(p.particle));
        }
        for (auto w : kAdjectives) lexemes.emplace_back(w);
        for (auto w : kTechAdjectives) lexemes.emplace_back(w);
        for (auto w : kAdverbs) lexemes.emplace_back(w);
        for (const auto& n : kNames) lexemes.push_back(lower(n.word));
        for (auto w : kPrepositions) lexemes.emplace_back(w);
        // he/she share one source pronoun; that is the ambiguity tiers rely on.
        for (auto w : {"i", "we", "you", "they", "he", "it", "this", "and", "but", "or", "because",
                       "was"}) {
            lexemes.emplace_back(w);
        }
        std::sort(lexemes.begin(), lexemes.end());
        lexemes.erase(std::unique(lexemes.begin(), lexemes.end()), lexemes.end());

        std::set<std::string> taken;
        for (const std::string& lexeme : lexemes) {
            for (std::uint64_t salt = 0;; ++salt) {
                const std::uint64_t h = fnv1a(lexeme, salt);
                const std::size_t n_syl = lexeme.size() <= 4 ? 2 : 2 + (h >> 60) % 2;
                std::string w;
                for (std::size_t s = 0; s < n_syl; ++s) {
                    w += kSyllables[(h >> (s * 8)) % kSyllables.size()];
                }
                if (taken.insert(w).second) {
                    words_.emplace(lexeme, std::move(w));
                    break;
                }
            }
        }
        words_["she"] = words_.at("he");
        words_["were"] = words_.at("was");
    }

    std::unordered_map<std::string, std::string> words_;
};

struct Word {
    std::string text;
    std::string tag;
};

struct Phrase {
    std::vector<Word> target;
    std::vector<std::string> source;
    Gender gender = Gender::neuter;
    bool plural = false;
};

/// Zipf sampler over a list prefix of size n.
class ZipfPicker {
public:
    ZipfPicker() = default;
    ZipfPicker(std::size_t n, double exponent) : cumulative_(n) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
            cumulative_[i] = total;
        }
        for (double& c : cumulative_) {
            c /= total;
        }
    }

    std::size_t pick(Rng& rng) const {
        const double u = uniform_unit(rng);
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                     cumulative_.size() - 1);
    }

    bool empty() const { return cumulative_.empty(); }

private:
    std::vector<double> cumulative_;
};

class SentenceGenerator {
public:
    SentenceGenerator(const TierGrammar& g)
        : g_(g),
          lex_(SourceLexicon::instance()),
          nouns_(std::min(g.nouns, kNouns.size()), g.zipf_exponent),
          tech_nouns_(std::min(g.tech_nouns, kTechNouns.size()), g.zipf_exponent),
          verbs_(std::min(g.verbs, kVerbs.size()), g.zipf_exponent),
          tech_verbs_(std::min(g.tech_verbs, kTechVerbs.size()), g.zipf_exponent),
          phrasal_(std::min(g.phrasal_verbs, kPhrasalVerbs.size()), g.zipf_exponent),
          adjectives_(std::min(g.adjectives, kAdjectives.size()), g.zipf_exponent),
          tech_adjectives_(std::min(g.tech_adjectives, kTechAdjectives.size()), g.zipf_exponent),
          adverbs_(std::min(g.adverbs, kAdverbs.size()), g.zipf_exponent),
          names_(std::min(g.names, kNames.size()), g.zipf_exponent),
          abbreviations_(std::min(g.abbreviations, kAbbreviations.size()), g.zipf_exponent),
          pronouns_(std::min(g.pronouns, kPronouns.size()), 0.5),
          prepositions_(std::min(g.prepositions, kPrepositions.size()), g.zipf_exponent) {
        if (nouns_.empty() || verbs_.empty()) {
            throw InputError("tier grammar needs at least one noun and one verb");
        }
    }

    ParallelPair sentence(Rng& rng) const {
        std::vector<Word> target;
        std::vector<std::string> source;
        Phrase last_subject;
        Phrase last_object;
        std::size_t clauses = 1;
        while (clauses <= g_.max_extra_clauses && chance(rng, g_.conjunction_rate)) {
            ++clauses;
        }
        static constexpr std::array<std::string_view, 3> kConj = {"and", "but", "or"};
        for (std::size_t c = 0; c < clauses; ++c) {
            if (c > 0) {
                const auto conj = kConj[static_cast<std::size_t>(uniform_unit(rng) * 3.0) % 3];
                target.push_back({std::string(conj), "CCONJ"});
                source.push_back(lex_.word(conj));
            }
            clause(rng, target, source, last_subject, last_object);
        }
        if (g_.adjectives + g_.tech_adjectives > 0 && chance(rng, g_.ambiguity_rate)) {
            const Phrase& referent = chance(rng, 0.5) ? last_subject : last_object;
            std::string pron = "it";
            if (referent.plural) {
                pron = "they";
            } else if (referent.gender == Gender::male) {
                pron = "he";
            } else if (referent.gender == Gender::female) {
                pron = "she";
            }
            const std::string copula = pron == "they" ? "were" : "was";
            const std::string adj = adjective(rng, false);
            target.push_back({"because", "OTHER"});
            target.push_back({pron, "PRON"});
            target.push_back({copula, "VERB"});
            target.push_back({adj, "ADJ"});
            source.push_back(lex_.word("because"));
            source.push_back(lex_.word(pron));
            source.push_back(lex_.word(adj));
            source.push_back(lex_.word(copula));
        }
        const auto& punct = g_.end_punctuation;
        const std::string end = punct[static_cast<std::size_t>(uniform_unit(rng) * static_cast<double>(punct.size())) % punct.size()];
        target.push_back({end, "PUNCT"});
        source.push_back(end);

        if (!g_.lowercase) {
            target.front().text = capitalize(target.front().text);
            source.front() = capitalize(source.front());
        }
        ParallelPair pair;
        for (std::size_t i = 0; i < target.size(); ++i) {
            if (i > 0) {
                pair.reference += ' ';
            }
            pair.reference += target[i].text;
            pair.reference_pos.push_back(target[i].tag);
        }
        for (std::size_t i = 0; i < source.size(); ++i) {
            if (i > 0) {
                pair.source += ' ';
            }
            pair.source += source[i];
        }
        return pair;
    }

private:
    static bool chance(Rng& rng, double p) { return p > 0.0 && uniform_unit(rng) < p; }

    std::string adjective(Rng& rng, bool tech) const {
        if (tech && !tech_adjectives_.empty()) {
            return std::string(kTechAdjectives[tech_adjectives_.pick(rng)]);
        }
        if (adjectives_.empty()) {
            return std::string(kTechAdjectives[tech_adjectives_.pick(rng)]);
        }
        return std::string(kAdjectives[adjectives_.pick(rng)]);
    }

    std::string determiner(Rng& rng, std::string_view next_word) const {
        if (chance(rng, g_.indefinite_rate)) {
            const bool vowel = !next_word.empty() &&
                               std::string_view("aeiouAEIOU").find(next_word.front()) != std::string_view::npos;
            return vowel ? "an" : "a";
        }
        return "the";
    }

    Phrase noun_phrase(Rng& rng, bool subject, bool tech) const {
        Phrase np;
        if (subject && chance(rng, g_.pronoun_rate)) {
            const std::string pron(kPronouns[pronouns_.pick(rng)]);
            np.target.push_back({pron, "PRON"});
            np.source.push_back(lex_.word(pron));
            np.gender = pron == "he" ? Gender::male : pron == "she" ? Gender::female : Gender::neuter;
            np.plural = pron == "we" || pron == "they";
            return np;
        }
        if (!names_.empty() && chance(rng, g_.name_rate)) {
            const Name& name = kNames[names_.pick(rng)];
            np.target.push_back({std::string(name.word), "PROPN"});
            np.source.push_back(capitalize(lex_.word(name.word)));
            np.gender = name.gender;
            return np;
        }
        const bool use_tech = tech && !tech_nouns_.empty();
        std::string noun;
        if (use_tech) {
            noun = std::string(kTechNouns[tech_nouns_.pick(rng)]);
        } else {
            const Noun& n = kNouns[nouns_.pick(rng)];
            noun = std::string(n.word);
            np.gender = n.gender;
        }
        std::vector<Word> modifiers;
        std::vector<std::string> source_modifiers;
        if (chance(rng, g_.adjective_rate) && (g_.adjectives > 0 || (use_tech && g_.tech_adjectives > 0))) {
            const std::string adj = adjective(rng, use_tech);
            modifiers.push_back({adj, "ADJ"});
            source_modifiers.push_back(lex_.word(adj));
        }
        std::string abbreviation;
        if (use_tech && !abbreviations_.empty() && chance(rng, g_.abbreviation_rate)) {
            abbreviation = std::string(kAbbreviations[abbreviations_.pick(rng)]);
        }
        if (chance(rng, g_.number_rate)) {
            const std::string num(kNumbers[static_cast<std::size_t>(uniform_unit(rng) * kNumbers.size()) % kNumbers.size()]);
            np.plural = true;
            np.gender = Gender::neuter;
            np.target.push_back({num, "NUM"});
            np.source.push_back(num);
            np.target.insert(np.target.end(), modifiers.begin(), modifiers.end());
            if (!abbreviation.empty()) {
                np.target.push_back({abbreviation, "PROPN"});
                np.source.push_back(abbreviation);
            }
            np.target.push_back({plural(noun), "NOUN"});
            np.source.push_back(lex_.word(noun));
            np.source.insert(np.source.end(), source_modifiers.begin(), source_modifiers.end());
            return np;
        }
        const std::string& first = !modifiers.empty() ? modifiers.front().text
                                   : !abbreviation.empty() ? abbreviation
                                                           : noun;
        np.target.push_back({determiner(rng, first), "DET"});
        np.target.insert(np.target.end(), modifiers.begin(), modifiers.end());
        if (!abbreviation.empty()) {
            np.target.push_back({abbreviation, "PROPN"});
            np.source.push_back(abbreviation);
        }
        np.target.push_back({noun, "NOUN"});
        np.source.push_back(lex_.word(noun));
        np.source.insert(np.source.end(), source_modifiers.begin(), source_modifiers.end());
        return np;
    }

    void clause(Rng& rng, std::vector<Word>& target, std::vector<std::string>& source,
                Phrase& subject_out, Phrase& object_out) const {
        const bool tech = chance(rng, g_.tech_rate);
        Phrase subject = noun_phrase(rng, true, false);
        std::vector<Word> verb;
        std::string verb_source;
        if (!phrasal_.empty() && chance(rng, g_.phrasal_rate)) {
            const Phrasal& p = kPhrasalVerbs[phrasal_.pick(rng)];
            verb.push_back({std::string(p.verb), "VERB"});
            verb.push_back({std::string(p.particle), "ADP"});
            verb_source = lex_.word(std::string(p.verb) + " " + std::string(p.particle));
        } else {
            const std::string v = tech && !tech_verbs_.empty() ? std::string(kTechVerbs[tech_verbs_.pick(rng)])
                                                               : std::string(kVerbs[verbs_.pick(rng)]);
            verb.push_back({v, "VERB"});
            verb_source = lex_.word(v);
        }
        Phrase object = noun_phrase(rng, false, tech);
        std::vector<Word> adverb;
        std::string adverb_source;
        if (!adverbs_.empty() && chance(rng, g_.adverb_rate)) {
            const std::string a(kAdverbs[adverbs_.pick(rng)]);
            adverb.push_back({a, "ADV"});
            adverb_source = lex_.word(a);
        }
        Phrase pp;
        if (!prepositions_.empty() && chance(rng, g_.pp_rate)) {
            const std::string prep(kPrepositions[prepositions_.pick(rng)]);
            Phrase np = noun_phrase(rng, false, tech);
            pp.target.push_back({prep, "ADP"});
            pp.target.insert(pp.target.end(), np.target.begin(), np.target.end());
            pp.source = np.source;
            pp.source.push_back(lex_.word(prep));
        }

        // Target: S V O [ADV] [PP].  Source: S O [PP] [ADV] V.
        target.insert(target.end(), subject.target.begin(), subject.target.end());
        target.insert(target.end(), verb.begin(), verb.end());
        target.insert(target.end(), object.target.begin(), object.target.end());
        target.insert(target.end(), adverb.begin(), adverb.end());
        target.insert(target.end(), pp.target.begin(), pp.target.end());
        source.insert(source.end(), subject.source.begin(), subject.source.end());
        source.insert(source.end(), object.source.begin(), object.source.end());
        source.insert(source.end(), pp.source.begin(), pp.source.end());
        if (!adverb_source.empty()) {
            source.push_back(adverb_source);
        }
        source.push_back(verb_source);
        subject_out = std::move(subject);
        object_out = std::move(object);
    }

    const TierGrammar& g_;
    const SourceLexicon& lex_;
    ZipfPicker nouns_;
    ZipfPicker tech_nouns_;
    ZipfPicker verbs_;
    ZipfPicker tech_verbs_;
    ZipfPicker phrasal_;
    ZipfPicker adjectives_;
    ZipfPicker tech_adjectives_;
    ZipfPicker adverbs_;
    ZipfPicker names_;
    ZipfPicker abbreviations_;
    ZipfPicker pronouns_;
    ZipfPicker prepositions_;
};

}  // namespace

TierGrammar default_grammar(int tier) {
    TierGrammar g;
    g.tier = tier;
    switch (tier) {
        case 1:
            // Short lowercase statements over a ~50 word target lexicon.
            break;
        case 2:
            g.nouns = 50;
            g.verbs = 30;
            g.adjectives = 12;
            g.adverbs = 8;
            g.names = 6;
            g.phrasal_verbs = 8;
            g.pronouns = 7;
            g.prepositions = 6;
            g.zipf_exponent = 1.05;
            g.max_extra_clauses = 1;
            g.conjunction_rate = 0.35;
            g.adjective_rate = 0.2;
            g.adverb_rate = 0.2;
            g.phrasal_rate = 0.25;
            g.pp_rate = 0.2;
            g.pronoun_rate = 0.5;
            g.name_rate = 0.15;
            g.indefinite_rate = 0.3;
            g.lowercase = false;
            g.end_punctuation = {".", "?", "!", "..."};
            break;
        case 3:
            g.nouns = 90;
            g.verbs = 50;
            g.adjectives = 40;
            g.adverbs = 12;
            g.names = 16;
            g.phrasal_verbs = 6;
            g.pronouns = 7;
            g.prepositions = 8;
            g.zipf_exponent = 0.9;
            g.max_extra_clauses = 1;
            g.conjunction_rate = 0.3;
            g.adjective_rate = 0.3;
            g.adverb_rate = 0.15;
            g.phrasal_rate = 0.1;
            g.pp_rate = 0.3;
            g.pronoun_rate = 0.2;
            g.name_rate = 0.35;
            g.ambiguity_rate = 0.8;
            g.indefinite_rate = 0.3;
            g.lowercase = false;
            break;
        case 4:
            g.nouns = 60;
            g.verbs = 40;
            g.adjectives = 30;
            g.adverbs = 16;
            g.names = 4;
            g.tech_nouns = kTechNouns.size();
            g.tech_verbs = kTechVerbs.size();
            g.tech_adjectives = kTechAdjectives.size();
            g.abbreviations = kAbbreviations.size();
            g.phrasal_verbs = kPhrasalVerbs.size();
            g.pronouns = 7;
            g.prepositions = kPrepositions.size();
            g.zipf_exponent = 0.75;
            g.max_extra_clauses = 1;
            g.conjunction_rate = 0.25;
            g.adjective_rate = 0.3;
            g.adverb_rate = 0.1;
            g.phrasal_rate = 0.2;
            g.pp_rate = 0.45;
            g.pronoun_rate = 0.15;
            g.name_rate = 0.05;
            g.tech_rate = 0.6;
            g.number_rate = 0.15;
            g.abbreviation_rate = 0.3;
            g.indefinite_rate = 0.25;
            g.lowercase = false;
            break;
        default:
            throw InputError("unknown synthetic tier " + std::to_string(tier) + " (expected 1..4)");
    }
    return g;
}

TierGrammar grammar_from_config(const KeyValueConfig& config, int tier) {
    TierGrammar g = default_grammar(tier);
    auto size = [&](std::string_view key, std::size_t& field) {
        const long long v = config.get_int(key, static_cast<long long>(field));
        if (v < 0) {
            throw InputError("grammar key '" + std::string(key) + "' must be >= 0");
        }
        field = static_cast<std::size_t>(v);
    };
    auto rate = [&](std::string_view key, double& field) {
        field = config.get_double(key, field);
        if (field < 0.0 || field > 1.0) {
            throw InputError("grammar key '" + std::string(key) + "' must lie in [0, 1]");
        }
    };
    size("nouns", g.nouns);
    size("verbs", g.verbs);
    size("adjectives", g.adjectives);
    size("adverbs", g.adverbs);
    size("names", g.names);
    size("tech_nouns", g.tech_nouns);
    size("tech_verbs", g.tech_verbs);
    size("tech_adjectives", g.tech_adjectives);
    size("abbreviations", g.abbreviations);
    size("phrasal_verbs", g.phrasal_verbs);
    size("pronouns", g.pronouns);
    size("prepositions", g.prepositions);
    size("max_extra_clauses", g.max_extra_clauses);
    g.zipf_exponent = config.get_double("zipf_exponent", g.zipf_exponent);
    rate("conjunction_rate", g.conjunction_rate);
    rate("adjective_rate", g.adjective_rate);
    rate("adverb_rate", g.adverb_rate);
    rate("phrasal_rate", g.phrasal_rate);
    rate("pp_rate", g.pp_rate);
    rate("pronoun_rate", g.pronoun_rate);
    rate("name_rate", g.name_rate);
    rate("ambiguity_rate", g.ambiguity_rate);
    rate("tech_rate", g.tech_rate);
    rate("number_rate", g.number_rate);
    rate("abbreviation_rate", g.abbreviation_rate);
    rate("indefinite_rate", g.indefinite_rate);
    g.lowercase = config.get_bool("lowercase", g.lowercase);
    return g;
}

std::vector<ParallelPair> generate_synthetic(const TierGrammar& grammar, std::size_t n,
                                             std::uint64_t seed) {
    if (n == 0) {
        throw ContractError("generate_synthetic: n must be positive");
    }
    const SentenceGenerator gen(grammar);
    const std::string tag = "tier" + std::to_string(grammar.tier);
    std::vector<ParallelPair> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(grammar.tier), i}));
        ParallelPair pair = gen.sentence(rng);
        pair.tag = tag;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::vector<ParallelPair> generate_synthetic_tier(int tier, std::size_t n, std::uint64_t seed) {
    return generate_synthetic(default_grammar(tier), n, seed);
}

std::map<std::string, std::string> tier_lexicon(const TierGrammar& g) {
    std::map<std::string, std::string> lex;
    auto put = [&](std::string_view w, const char* tag) { lex.emplace(lower(w), tag); };
    for (std::size_t i = 0; i < std::min(g.nouns, kNouns.size()); ++i) {
        put(kNouns[i].word, "NOUN");
        if (g.number_rate > 0.0) put(plural(kNouns[i].word), "NOUN");
    }
    for (std::size_t i = 0; i < std::min(g.tech_nouns, kTechNouns.size()); ++i) {
        put(kTechNouns[i], "NOUN");
        if (g.number_rate > 0.0) put(plural(kTechNouns[i]), "NOUN");
    }
    for (std::size_t i = 0; i < std::min(g.verbs, kVerbs.size()); ++i) put(kVerbs[i], "VERB");
    for (std::size_t i = 0; i < std::min(g.tech_verbs, kTechVerbs.size()); ++i) put(kTechVerbs[i], "VERB");
    for (std::size_t i = 0; i < std::min(g.phrasal_verbs, kPhrasalVerbs.size()); ++i) {
        put(kPhrasalVerbs[i].verb, "VERB");
        put(kPhrasalVerbs[i].particle, "ADP");
    }
    for (std::size_t i = 0; i < std::min(g.adjectives, kAdjectives.size()); ++i) put(kAdjectives[i], "ADJ");
    for (std::size_t i = 0; i < std::min(g.tech_adjectives, kTechAdjectives.size()); ++i) put(kTechAdjectives[i], "ADJ");
    for (std::size_t i = 0; i < std::min(g.adverbs, kAdverbs.size()); ++i) put(kAdverbs[i], "ADV");
    for (std::size_t i = 0; i < std::min(g.names, kNames.size()); ++i) put(kNames[i].word, "PROPN");
    for (std::size_t i = 0; i < std::min(g.abbreviations, kAbbreviations.size()); ++i) put(kAbbreviations[i], "PROPN");
    for (std::size_t i = 0; i < std::min(g.pronouns, kPronouns.size()); ++i) put(kPronouns[i], "PRON");
    for (std::size_t i = 0; i < std::min(g.prepositions, kPrepositions.size()); ++i) put(kPrepositions[i], "ADP");
    for (auto w : kNumbers) put(w, "NUM");
    for (const auto& p : g.end_punctuation) put(p, "PUNCT");
    put("the", "DET");
    put("a", "DET");
    put("an", "DET");
    put("and", "CCONJ");
    put("but", "CCONJ");
    put("or", "CCONJ");
    put("because", "OTHER");
    put("he", "PRON");
    put("she", "PRON");
    put("it", "PRON");
    put("they", "PRON");
    put("was", "VERB");
    put("were", "VERB");
    return lex;
}

double type_token_ratio(std::span<const ParallelPair> pairs) {
    std::set<std::string> types;
    std::size_t tokens = 0;
    for (const ParallelPair& p : pairs) {
        for (std::string& w : split_words(p.reference)) {
            types.insert(lower(w));
            ++tokens;
        }
    }
    return tokens == 0 ? 0.0 : static_cast<double>(types.size()) / static_cast<double>(tokens);
}

}  // namespace wmt
