"""
Imports all modules into the final tvtree application. Import order matters: services and base commands come before the commands
which derive from them.
"""

import tvtree.app.core

import tvtree.app.configparseruserconfig

import tvtree.app.arraytextsaving
import tvtree.app.pgmimagesaving
import tvtree.app.unaryvolumesaving
import tvtree.app.treetextsaving
import tvtree.app.dictjsonsaving
import tvtree.app.convergencelogsaving

import tvtree.app.tv1dcommand
import tvtree.app.denoisecommands
import tvtree.app.stereocommand
import tvtree.app.benchcommand
import tvtree.app.oraclecommand
import tvtree.app.synthcommand
