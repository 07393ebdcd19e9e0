#include <algorithm>
#include <cctype>
#include <sstream>

#include "skillsim/error.hpp"
#include "skillsim/task/task.hpp"

namespace skillsim::task {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Task names become file/directory names downstream.
std::string to_identifier(const std::string& raw) {
  std::string out;
  for (char c : trim(raw)) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')
      out.push_back(c);
    else if (std::isspace(static_cast<unsigned char>(c)))
      out.push_back('-');
  }
  return out;
}

// Case-insensitive "does the trimmed line start with prefix"; returns the
// remainder after the prefix.
bool match_header(const std::string& line, const std::string& prefix,
                  std::string* rest) {
  if (line.size() < prefix.size()) return false;
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(line[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  *rest = trim(line.substr(prefix.size()));
  return true;
}

// "Subtask 2: Name" / "subtask: Name" -> Name.
bool match_subtask(const std::string& line, std::string* rest) {
  std::string lower;
  for (char c : line) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower.rfind("subtask", 0) != 0) return false;
  size_t i = 7;
  while (i < line.size() && (std::isspace(static_cast<unsigned char>(line[i])) ||
                             std::isdigit(static_cast<unsigned char>(line[i]))))
    ++i;
  if (i >= line.size() || line[i] != ':') return false;
  *rest = trim(line.substr(i + 1));
  return true;
}

}  // namespace

std::vector<TaskSpec> parse_task_response(const std::string& text) {
  std::vector<TaskSpec> tasks;
  TaskSpec* task = nullptr;
  SubtaskSpec* subtask = nullptr;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    std::string rest;

    if (line.rfind("```", 0) == 0) {
      // Fenced reward program; runs to the closing fence.
      const int fence_line = line_no;
      std::string body;
      bool closed = false;
      while (std::getline(in, raw)) {
        ++line_no;
        if (trim(raw).rfind("```", 0) == 0) {
          closed = true;
          break;
        }
        body += raw + "\n";
      }
      const std::string owner = subtask ? subtask->name : "<none>";
      if (!closed)
        throw RewardParseError("subtask " + owner + ": code fence opened at line " +
                               std::to_string(fence_line) + " is never closed");
      if (!subtask) continue;  // stray fence outside any subtask: chatter
      try {
        subtask->reward = rdsl::parse_reward(body);
      } catch (const Error& e) {
        throw RewardParseError("subtask " + owner + " (fence at line " +
                               std::to_string(fence_line) + "): " + e.what());
      }
      continue;
    }

    if (match_header(line, "task:", &rest)) {
      tasks.emplace_back();
      task = &tasks.back();
      subtask = nullptr;
      task->task_name = to_identifier(rest);
      if (task->task_name.empty())
        task->task_name = "Task" + std::to_string(tasks.size());
      continue;
    }
    if (match_subtask(line, &rest)) {
      if (!task) continue;  // chatter before any task header
      task->subtasks.emplace_back();
      subtask = &task->subtasks.back();
      subtask->name = to_identifier(rest);
      if (subtask->name.empty())
        subtask->name = "Subtask" + std::to_string(task->subtasks.size());
      continue;
    }
    if (match_header(line, "description:", &rest)) {
      if (subtask) subtask->description = rest;
      else if (task) task->description = rest;
      continue;
    }
    // Everything else is LLM prose; ignored.
  }

  if (tasks.empty()) throw NoTaskFound("response contains no \"Task:\" header");
  for (const auto& t : tasks) {
    if (t.subtasks.empty())
      throw RewardParseError("task " + t.task_name + " has no subtasks");
    for (const auto& st : t.subtasks) {
      if (st.reward.terms.empty())
        throw RewardParseError("subtask " + st.name + " of task " + t.task_name +
                               " has no reward program");
    }
  }
  return tasks;
}

}  // namespace skillsim::task
