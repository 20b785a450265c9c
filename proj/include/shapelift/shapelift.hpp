/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/shapelift.hpp
 *
 * Copyright 2026 The shapelift authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef SHAPELIFT_SHAPELIFT_HPP
#define SHAPELIFT_SHAPELIFT_HPP

#include "shapelift/dictlearn.hpp"
#include "shapelift/io.hpp"
#include "shapelift/metrics.hpp"
#include "shapelift/parallel.hpp"
#include "shapelift/pipelines.hpp"
#include "shapelift/prox.hpp"
#include "shapelift/reconstruct.hpp"
#include "shapelift/robust.hpp"
#include "shapelift/shape_ops.hpp"
#include "shapelift/solver.hpp"
#include "shapelift/synthetic.hpp"
#include "shapelift/types.hpp"

#endif /* SHAPELIFT_SHAPELIFT_HPP */
