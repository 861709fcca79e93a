"""
Shared models for the Biot solver commands
"""

from pydantic import BaseModel, Field


class CommandResult(BaseModel):
    """Outcome of one sub-command"""
    success: bool = Field(description="Whether the command completed")
    command: str = Field(description="Sub-command name")
    files: list[str] = Field(default_factory=list, description="Files written")
    message: str | None = None
    error: str | None = None
