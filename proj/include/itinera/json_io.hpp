#pragma once

// JSON plumbing: canonical output and a path-tracking field reader used by
// every decoder so schema errors name the offending field.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "itinera/core.hpp"

namespace itinera {

using Json = nlohmann::json;

// Sorted keys (nlohmann objects are ordered maps), two-space indent,
// trailing newline. Equal values always produce equal bytes.
inline std::string canonical(const Json& j) { return j.dump(2) + "\n"; }

inline Json parse_json(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.byte, "", e.what());
    }
}

inline Json to_json(Money m) { return m.fen; }
inline Json to_json(Date d) { return d.str(); }
template <class Tag>
Json to_json(const Id<Tag>& id) {
    return id.value;
}

// Read-only cursor over a JSON value that remembers where it is.
class JsonReader {
public:
    JsonReader(const Json& j, std::string path = "") : j_(&j), path_(std::move(path)) {}

    const Json& raw() const { return *j_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(std::nullopt, path_.empty() ? "/" : path_, msg); }

    bool has(std::string_view key) const {
        return j_->is_object() && j_->contains(key) && !(*j_)[std::string(key)].is_null();
    }

    JsonReader at(std::string_view key) const {
        expect_object();
        auto it = j_->find(key);
        if (it == j_->end() || it->is_null())
            JsonReader(*j_, path_ + "/" + std::string(key)).fail("missing required field");
        return JsonReader(*it, path_ + "/" + std::string(key));
    }

    std::optional<JsonReader> maybe(std::string_view key) const {
        expect_object();
        auto it = j_->find(key);
        if (it == j_->end() || it->is_null()) return std::nullopt;
        return JsonReader(*it, path_ + "/" + std::string(key));
    }

    std::vector<JsonReader> items() const {
        if (!j_->is_array()) fail("expected array");
        std::vector<JsonReader> out;
        out.reserve(j_->size());
        for (std::size_t i = 0; i < j_->size(); ++i) out.emplace_back((*j_)[i], path_ + "/" + std::to_string(i));
        return out;
    }

    std::string str() const {
        if (!j_->is_string()) fail("expected string");
        return j_->get<std::string>();
    }

    std::int64_t integer() const {
        if (j_->is_number_integer()) return j_->get<std::int64_t>();
        if (j_->is_number_float()) {
            const double d = j_->get<double>();
            if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
        }
        fail("expected integer");
    }

    int int32() const {
        const auto v = integer();
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail("integer out of range");
        return static_cast<int>(v);
    }

    double number() const {
        if (!j_->is_number()) fail("expected number");
        return j_->get<double>();
    }

    bool boolean() const {
        if (!j_->is_boolean()) fail("expected boolean");
        return j_->get<bool>();
    }

    Date date() const {
        try {
            return Date::parse(str());
        } catch (const ArgumentError& e) {
            fail(e.what());
        }
    }

    // Decimal CNY amount (knowledge-base and query files).
    Money yuan() const {
        try {
            return Money::from_yuan(number());
        } catch (const ArgumentError& e) {
            fail(e.what());
        }
    }

    // Integer fen (plan files).
    Money fen() const { return Money::from_fen(integer()); }

    template <class Tag>
    Id<Tag> id() const {
        auto s = str();
        if (s.empty()) fail("empty identifier");
        return Id<Tag>(std::move(s));
    }

    std::vector<std::string> strings() const {
        std::vector<std::string> out;
        for (const auto& it : items()) out.push_back(it.str());
        return out;
    }

private:
    void expect_object() const {
        if (!j_->is_object()) fail("expected object");
    }

    const Json* j_;
    std::string path_;
};

}  // namespace itinera
