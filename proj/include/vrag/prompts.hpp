/*
 * Copyright 2026 The vrag Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string_view>

namespace vrag::prompts {

// Byte-identical copies of prompts/synthetic_qa.txt and prompts/geval.txt
// (template version 1). A unit test keeps them in sync with the files.

inline constexpr std::string_view kTemplateVersion = "1";

inline constexpr std::string_view kSyntheticQa = R"PROMPT(
Your task is to create 3 diverse, relevant, and realistic question-answer pairs specifically designed to evaluate a Retrieval-Augmented Generation (RAG) system using the provided video. The questions should be crafted in a way that answering them requires retrieving the specific video or its information from a large corpus, without being overly specific or relying on minor details. Focus on crafting questions that are general enough to apply broadly yet detailed enough to leverage key information from the video. Avoid direct references such as 'in this video' or overly specific mentions that limit the question's scope to the given video. Instead, structure questions to include contextual cues or keywords that would aid in retrieving the correct content while maintaining natural language flow.

Consider including questions that cover:
- Generalized step-by-step actions or procedures (e.g., preparation steps, typical tasks)
- Logical connections between steps (e.g., 'What should be done after breaking apart the ingredients?')
- Common tools or objects involved and their general purpose
- Contextual or background details that support retrieval (e.g., setting or process clues)
- Typical outcomes or results of observed actions or procedures

The JSON structure should look like this:
[
  {"question": "<Insert Question 1>", "answer": "<Insert Answer 1>"},
  {"question": "<Insert Question 2>", "answer": "<Insert Answer 2>"},
  {"question": "<Insert Question 3>", "answer": "<Insert Answer 3>"}
]
... up to 3 question-answer pairs
)PROMPT";

inline constexpr std::string_view kGeval = R"PROMPT(
You are tasked with evaluating a Generated Response to the given Question based on its overall quality compared to a provided Ground Truth Answer.

Evaluation Criteria:
1. Carefully read the Ground Truth and the Generated Response.
2. Assess how well the Generated Response matches the Ground Truth. Please penalize the Generated Response that has the far different content and style and is largely longer than the Ground Truth.
3. Provide an overall score (1-5) based on your evaluation.

Question: {{Question}}
Ground Truth Answer: {{Ground_Truth_Answer}}
Generated Response: {{Generated_Response}}

Please provide only a single numerical rating (1, 2, 3, 4, or 5), without any additional commentary, formatting, or chattiness.
)PROMPT";

/// The raw literals start with a newline after the opening delimiter.
inline constexpr std::string_view synthetic_qa() { return kSyntheticQa.substr(1); }
inline constexpr std::string_view geval() { return kGeval.substr(1); }

}  // namespace vrag::prompts
