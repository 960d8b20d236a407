#pragma once

#include <cctype>
#include <stdexcept>
#include <string>
#include <vector>

// Minimal XML well-formedness check for the SVG emitters: tag balance, quoted
// attributes, no stray '<' or '&'. Test-only helper, not a real parser.
inline bool xml_well_formed(const std::string& text, std::string* error = nullptr) {
  auto fail = [&](const std::string& message) {
    if (error) *error = message;
    return false;
  };
  std::vector<std::string> stack;
  std::size_t i = 0;
  const std::size_t n = text.size();
  if (text.rfind("<?xml", 0) == 0) {
    const auto end = text.find("?>");
    if (end == std::string::npos) return fail("unterminated declaration");
    i = end + 2;
  }
  while (i < n) {
    const char c = text[i];
    if (c == '<') {
      if (i + 1 >= n) return fail("dangling '<'");
      if (text[i + 1] == '/') {
        const auto end = text.find('>', i);
        if (end == std::string::npos) return fail("unterminated closing tag");
        const std::string name = text.substr(i + 2, end - i - 2);
        if (stack.empty() || stack.back() != name)
          return fail("mismatched closing tag: " + name);
        stack.pop_back();
        i = end + 1;
        continue;
      }
      if (text.compare(i, 4, "<!--") == 0) {
        const auto end = text.find("-->", i);
        if (end == std::string::npos) return fail("unterminated comment");
        i = end + 3;
        continue;
      }
      // Opening tag: scan to the matching '>' outside quotes.
      std::size_t j = i + 1;
      std::string name;
      while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == ':' ||
                       text[j] == '-' || text[j] == '_'))
        name.push_back(text[j++]);
      if (name.empty()) return fail("empty tag name");
      bool in_quote = false;
      char quote_char = 0;
      bool self_closed = false;
      while (j < n) {
        const char d = text[j];
        if (in_quote) {
          if (d == quote_char) in_quote = false;
        } else if (d == '"' || d == '\'') {
          in_quote = true;
          quote_char = d;
        } else if (d == '>') {
          self_closed = j > 0 && text[j - 1] == '/';
          break;
        } else if (d == '<') {
          return fail("unescaped '<' inside tag");
        }
        ++j;
      }
      if (j >= n) return fail("unterminated tag: " + name);
      if (in_quote) return fail("unterminated attribute quote in " + name);
      if (!self_closed) stack.push_back(name);
      i = j + 1;
      continue;
    }
    if (c == '&') {
      const auto sem = text.find(';', i);
      if (sem == std::string::npos || sem - i > 8) return fail("bare '&'");
      const std::string entity = text.substr(i + 1, sem - i - 1);
      if (entity != "amp" && entity != "lt" && entity != "gt" && entity != "quot" &&
          entity != "apos")
        return fail("unknown entity: " + entity);
      i = sem + 1;
      continue;
    }
    if (c == '>') return fail("stray '>'");
    ++i;
  }
  if (!stack.empty()) return fail("unclosed tag: " + stack.back());
  return true;
}

inline int count_occurrences(const std::string& text, const std::string& needle) {
  int count = 0;
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}
